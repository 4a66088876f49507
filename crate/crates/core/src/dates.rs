//! Minimal calendar dates: parsing of document timestamps and of datetime
//! mentions found in text, plus ordering. Supported mention forms are
//! numeric dates (`m/d`, `m/d/yy`, `m/d/yyyy`, `yyyy-mm-dd`) and month-name
//! forms (`March 15`, `March 15, 2020`, `15 March 2020`). Anything else is
//! rejected so the caller can abstain.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Date {
    pub year: i32,
    pub month: u32,
    pub day: u32,
}

const MONTH_NAMES: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
            if leap { 29 } else { 28 }
        }
        _ => 0,
    }
}

fn month_from_name(word: &str) -> Option<u32> {
    let w = word.to_lowercase();
    let w = w.trim_end_matches('.');
    for (i, full) in MONTH_NAMES.iter().enumerate() {
        if w == *full || (w.len() >= 3 && full.starts_with(w) && w.len() <= full.len()) {
            // Require at least the conventional 3-letter abbreviation.
            if w.len() >= 3 {
                return Some(i as u32 + 1);
            }
        }
    }
    None
}

fn expand_two_digit_year(yy: i32) -> i32 {
    if yy < 50 { 2000 + yy } else { 1900 + yy }
}

impl Date {
    pub fn new(year: i32, month: u32, day: u32) -> Option<Date> {
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return None;
        }
        Some(Date { year, month, day })
    }

    /// Strict ISO-8601 calendar date: `YYYY-MM-DD`.
    pub fn parse_iso(s: &str) -> Option<Date> {
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() != 3 || parts[0].len() != 4 {
            return None;
        }
        let year: i32 = parts[0].parse().ok()?;
        let month: u32 = parts[1].parse().ok()?;
        let day: u32 = parts[2].parse().ok()?;
        Date::new(year, month, day)
    }

    /// Parse a datetime mention from running text. `reference_year` fills in
    /// the year for forms that omit it (`3/14`, `March 15`).
    pub fn parse_mention(s: &str, reference_year: i32) -> Option<Date> {
        let s = s.trim().trim_end_matches(['.', ',']);
        if let Some(d) = Date::parse_iso(s) {
            return Some(d);
        }
        // m/d, m/d/yy, m/d/yyyy
        if s.contains('/') {
            let parts: Vec<&str> = s.split('/').collect();
            let month: u32 = parts.first()?.trim().parse().ok()?;
            let day: u32 = parts.get(1)?.trim().parse().ok()?;
            let year = match parts.len() {
                2 => reference_year,
                3 => {
                    let raw = parts[2].trim();
                    let y: i32 = raw.parse().ok()?;
                    if raw.len() <= 2 { expand_two_digit_year(y) } else { y }
                }
                _ => return None,
            };
            return Date::new(year, month, day);
        }
        // Month-name forms.
        let cleaned = s.replace(',', " ");
        let words: Vec<&str> = cleaned.split_whitespace().collect();
        match words.len() {
            2 | 3 => {
                let (month, day_word) = if let Some(m) = month_from_name(words[0]) {
                    (m, words[1])
                } else {
                    (month_from_name(words[1])?, words[0])
                };
                let day: u32 = day_word.parse().ok()?;
                let year = if words.len() == 3 {
                    words[2].parse().ok()?
                } else {
                    reference_year
                };
                Date::new(year, month, day)
            }
            _ => None,
        }
    }

    pub fn to_iso(self) -> String {
        format!("{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}
