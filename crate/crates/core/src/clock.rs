//! Simulation time. A tick is an absolute slot counted from midnight of day
//! 0, so a day always holds `ticks_per_day` slots even though only the
//! waking window is simulated.

use serde::{Deserialize, Serialize};

pub type Tick = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Clock {
    pub tick_minutes: u32,
    /// Waking window in minutes after midnight, end exclusive.
    pub day_start_min: u32,
    pub day_end_min: u32,
}

impl Default for Clock {
    fn default() -> Self {
        Clock {
            tick_minutes: 15,
            day_start_min: 6 * 60,
            day_end_min: 24 * 60,
        }
    }
}

impl Clock {
    pub fn validate(&self) -> Result<(), String> {
        if self.tick_minutes == 0 || 1440 % self.tick_minutes != 0 {
            return Err(format!("tick of {} minutes does not divide the day", self.tick_minutes));
        }
        if self.day_start_min % self.tick_minutes != 0 || self.day_end_min % self.tick_minutes != 0 {
            return Err("day window must fall on tick boundaries".into());
        }
        if self.day_start_min >= self.day_end_min || self.day_end_min > 1440 {
            return Err("day window must be non-empty and within one day".into());
        }
        Ok(())
    }

    pub fn ticks_per_day(&self) -> u64 {
        (1440 / self.tick_minutes) as u64
    }

    pub fn ticks_per_hour(&self) -> f64 {
        60.0 / self.tick_minutes as f64
    }

    /// Ticks in the waking window.
    pub fn waking_ticks(&self) -> u64 {
        ((self.day_end_min - self.day_start_min) / self.tick_minutes) as u64
    }

    pub fn day_of(&self, tick: Tick) -> u64 {
        tick / self.ticks_per_day()
    }

    pub fn minute_of_day(&self, tick: Tick) -> u32 {
        (tick % self.ticks_per_day()) as u32 * self.tick_minutes
    }

    pub fn day_start(&self, day: u64) -> Tick {
        day * self.ticks_per_day() + (self.day_start_min / self.tick_minutes) as u64
    }

    /// First tick after the waking window.
    pub fn day_end(&self, day: u64) -> Tick {
        day * self.ticks_per_day() + (self.day_end_min / self.tick_minutes) as u64
    }

    pub fn is_waking(&self, tick: Tick) -> bool {
        let m = self.minute_of_day(tick);
        m >= self.day_start_min && m < self.day_end_min
    }

    /// Next waking tick at or after `tick`.
    pub fn next_waking(&self, tick: Tick) -> Tick {
        if self.is_waking(tick) {
            return tick;
        }
        let day = self.day_of(tick);
        if self.minute_of_day(tick) < self.day_start_min {
            self.day_start(day)
        } else {
            self.day_start(day + 1)
        }
    }

    pub fn hours(&self, ticks: u64) -> f64 {
        ticks as f64 / self.ticks_per_hour()
    }

    pub fn hhmm(&self, tick: Tick) -> String {
        fmt_minutes(self.minute_of_day(tick))
    }

    /// `day D HH:MM`.
    pub fn stamp(&self, tick: Tick) -> String {
        format!("day {} {}", self.day_of(tick), self.hhmm(tick))
    }

    /// Parses `HH:MM` on `day`; `24:00` is the end of that day. Minutes are
    /// rounded down to the tick grid.
    pub fn parse_hhmm(&self, day: u64, s: &str) -> Option<Tick> {
        let (h, m) = s.trim().split_once(':')?;
        let h: u32 = h.trim().parse().ok()?;
        let m: u32 = m.trim().get(..2).unwrap_or(m.trim()).parse().ok()?;
        if m >= 60 || h > 24 || (h == 24 && m > 0) {
            return None;
        }
        let minutes = h * 60 + m;
        Some(day * self.ticks_per_day() + (minutes / self.tick_minutes) as u64)
    }

    /// Parses a due time such as `18:00`, `tomorrow 10:00` or `day 3 09:30`
    /// relative to `now`. A bare time already past today refers to tomorrow.
    pub fn parse_due(&self, now: Tick, s: &str) -> Option<Tick> {
        let lower = s.trim().to_lowercase();
        let time_re = regex::Regex::new(r"(\d{1,2}):(\d{2})").expect("regex");
        let cap = time_re.captures(&lower)?;
        let hm = format!("{}:{}", &cap[1], &cap[2]);
        let today = self.day_of(now);
        let explicit_day = regex::Regex::new(r"\bday\s+(\d+)")
            .expect("regex")
            .captures(&lower)
            .and_then(|c| c[1].parse::<u64>().ok());
        let tomorrow = lower.contains("tomorrow");
        let day = match (tomorrow, explicit_day) {
            (true, _) => today + 1,
            (false, Some(d)) => d,
            (false, None) => today,
        };
        let t = self.parse_hhmm(day, &hm)?;
        if t < now && !tomorrow && explicit_day.is_none() {
            self.parse_hhmm(day + 1, &hm)
        } else {
            Some(t)
        }
    }
}

pub fn fmt_minutes(m: u32) -> String {
    format!("{:02}:{:02}", m / 60, m % 60)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_window_has_72_ticks() {
        let c = Clock::default();
        c.validate().unwrap();
        assert_eq!(c.ticks_per_day(), 96);
        assert_eq!(c.waking_ticks(), 72);
        assert_eq!(c.day_start(1), 96 + 24);
        assert_eq!(c.day_end(0), 96);
        assert_eq!(c.hhmm(c.day_start(0)), "06:00");
    }

    #[test]
    fn parsing_times() {
        let c = Clock::default();
        assert_eq!(c.parse_hhmm(0, "19:00"), Some(76));
        assert_eq!(c.parse_hhmm(0, "24:00"), Some(96));
        assert_eq!(c.parse_hhmm(0, "25:00"), None);
        let now = c.parse_hhmm(0, "12:00").unwrap();
        assert_eq!(c.parse_due(now, "tomorrow 10:00"), c.parse_hhmm(1, "10:00"));
        assert_eq!(c.parse_due(now, "at 18:00"), c.parse_hhmm(0, "18:00"));
        assert_eq!(c.parse_due(now, "09:00"), c.parse_hhmm(1, "09:00"));
        assert_eq!(c.parse_due(now, "sometime"), None);
        assert_eq!(c.parse_due(now, "today 18:00"), c.parse_hhmm(0, "18:00"));
        assert_eq!(c.parse_due(now, "day 3 09:30"), c.parse_hhmm(3, "09:30"));
    }

    #[test]
    fn bad_clocks_rejected() {
        assert!(Clock { tick_minutes: 7, ..Clock::default() }.validate().is_err());
        assert!(Clock { day_start_min: 600, day_end_min: 600, ..Clock::default() }.validate().is_err());
    }

    #[test]
    fn next_waking_skips_night() {
        let c = Clock::default();
        assert_eq!(c.next_waking(96), c.day_start(1));
        assert_eq!(c.next_waking(30), 30);
    }
}
