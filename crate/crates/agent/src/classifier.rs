//! Deterministic keyword classifier over the intent taxonomy. Serves as the offline baseline
//! and as the classification the scripted provider reports.
//!
//! Rules are tried in a fixed priority order and the first match wins:
//!
//! 1. memory (remember / forget / preferences), so "Delete my AC preference" is not a schedule edit;
//! 2. troubleshooting, guidance and FAQ phrasings, which mention devices and energy in passing;
//! 3. scheduling (schedule edits and lookups, conditionals, timed commands);
//! 4. cost (any money word), split into visualization, suggestions, prediction, information;
//! 5. meters, before energy, so "energy meters" is a meter question;
//! 6. energy, split the same way, with "when are the peak hours" kept historical, then
//!    off-peak and peak-demand phrasings as optimization;
//! 7. device control (groups, custom configurations, plain commands, status);
//! 8. everything else is an FAQ.

use bems_core::{IntentLabel, Secondary};

struct Query {
    text: String,
}

impl Query {
    fn new(q: &str) -> Self {
        let cleaned: String = q
            .to_lowercase()
            .chars()
            .map(|c| if c.is_alphanumeric() || c == '\'' || c == ':' || c == '-' || c == '.' { c } else { ' ' })
            .collect();
        Query { text: format!(" {} ", cleaned.split_whitespace().collect::<Vec<_>>().join(" ")) }
    }

    fn has(&self, needle: &str) -> bool {
        self.text.contains(needle)
    }

    fn any(&self, needles: &[&str]) -> bool {
        needles.iter().any(|n| self.has(n))
    }

    fn starts(&self, prefixes: &[&str]) -> bool {
        let t = self.text.trim_start();
        prefixes.iter().any(|p| t.starts_with(p))
    }

    /// "at 7 in the morning", "at 11 pm", "at 6:30 am", "every day", "when I go to sleep".
    fn has_time_phrase(&self) -> bool {
        if self.any(&[" every day", " daily", " on weekdays", " on weekends", " during off-peak", " when i go to sleep", " at bedtime", " at sunset", " at night"]) {
            return true;
        }
        let words: Vec<&str> = self.text.split_whitespace().collect();
        words.windows(3).any(|w| {
            let clock = w[1].trim_end_matches('.');
            let numeric = !clock.is_empty() && clock.chars().all(|c| c.is_ascii_digit() || c == ':') && clock.starts_with(|c: char| c.is_ascii_digit());
            let meridiem = matches!(w[2].trim_end_matches('.'), "am" | "pm" | "a.m" | "p.m" | "in");
            w[0] == "at" && numeric && (meridiem || clock.contains(':'))
        })
    }
}

const MONEY: &[&str] = &[
    " cost", " spend", " spent", " spending", " bill", " pay ", " paid", " money", " price", " credit", " earn", " dollar",
    " tariff ",
];
const ENERGY: &[&str] = &[" energy", "consum", " usage", " kwh", " solar", " pv ", "generat", " spikes", " electricity use"];
const COMMAND: &[&str] = &["turn ", "set ", "switch ", "start ", "charge ", "run ", "put ", "make ", "dim "];

fn classify(q: &Query) -> Secondary {
    use Secondary::*;

    // Memory.
    if q.starts(&["remember", "please remember", "note that", "keep in mind"]) {
        return MemoryCreation;
    }
    if q.has(" forget ")
        || (q.any(&[" delete ", " remove ", " update ", " change "]) && q.any(&[" preference", " what i said"]))
    {
        return MemoryManagement;
    }
    if q.any(&[" preference", " usually ", " remember "]) {
        return MemoryInformation;
    }

    // Support phrasings.
    if q.any(&[" doesn't work", " does not work", " won't ", " isn't ", " not working", " unresponsive", " what's wrong", " broken"]) {
        return Troubleshooting;
    }
    if q.any(&[" guide me", " how do i ", " explain how", " what kinds of things", " walk me through", " tutorial"]) {
        return Guidance;
    }
    if q.has(" what should i do if ")
        || q.starts(&["what is a ", "what is an ", "what is net ", "what does "])
        || q.any(&[" private", " privacy"])
    {
        return Faq;
    }

    // Scheduling.
    if q.has(" schedule") && q.any(&[" remove ", " delete ", " disable ", " pause ", " change ", " cancel ", " edit "]) {
        return ScheduleManagement;
    }
    if (q.has(" schedule") && q.any(&[" have i ", " do i have ", " what schedules", " any ", " is there "]))
        || q.has(" any automation")
        || q.starts(&["when will "])
    {
        return ScheduleInformation;
    }
    if q.starts(&["if ", "when the ", "whenever "]) {
        return ConditionalAutomation;
    }
    if q.starts(COMMAND) && q.has_time_phrase() {
        return GeneralScheduling;
    }

    // Cost.
    if q.any(MONEY) {
        if q.any(&[" plot", " chart", " graph", " visualiz", " pie "]) {
            return CostVisualization;
        }
        if q.any(&[" suggestion", " tips", " how can i ", " worth ", " would ", " advice"]) {
            return CostSuggestions;
        }
        if q.any(&[" will ", " next ", " predict", " forecast", " estimate", " tomorrow"]) {
            return CostPrediction;
        }
        return CostInformation;
    }

    if q.has(" meter") {
        return MeterStatus;
    }

    // Energy.
    if q.any(ENERGY) {
        if q.starts(&["when are the peak", "what are the peak", "what were the peak"]) {
            return HistoricalEnergy;
        }
        if q.any(&[" pie chart", " plot", " chart", " heatmap", " visualiz", " graph", " draw "]) {
            return EnergyVisualization;
        }
        if q.any(&[" predict", " forecast", " will ", " next month", " next week", " tomorrow"]) {
            return EnergyPrediction;
        }
        if q.any(&[" peak", " shift ", " best time", " make better use"]) {
            return EnergyOptimization;
        }
        if q.any(&[" suggestion", " tips", " should i ", " unusual", " focus on", " advice", " recommend"]) {
            return EnergySuggestions;
        }
        return HistoricalEnergy;
    }
    // Load shifting without an energy word: "which appliances should I shift to off-peak hours".
    if q.any(&[" off-peak", " peak demand"]) {
        return EnergyOptimization;
    }

    // Devices.
    if q.starts(COMMAND) && q.any(&[" all ", " everything"]) {
        return GroupManagement;
    }
    if q.any(&[" brightness level", " good for ", " eco ", " program", " amps", " movie", " cozy"]) || q.starts(&["dim "]) {
        return CustomConfiguration;
    }
    if q.starts(COMMAND) {
        return DeviceOperation;
    }
    if q.starts(&["is the ", "is my ", "are the ", "what temperature", "what mode", "what is the brightness", "what is the status", "which devices are"])
        || q.any(&[" currently ", " online", " status"])
    {
        return DeviceStatus;
    }
    Faq
}

/// Labels a query with the rule table above. Never fails; unmatched text is an FAQ.
pub fn rule_classifier(query: &str) -> IntentLabel {
    IntentLabel::of(classify(&Query::new(query)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_phrases() {
        assert!(Query::new("Turn on my coffee maker at 7 in the morning.").has_time_phrase());
        assert!(Query::new("Start it at 6:30 AM").has_time_phrase());
        assert!(!Query::new("Set the EV charger to charge at 16 amps.").has_time_phrase());
    }

    #[test]
    fn gibberish_is_faq() {
        assert_eq!(rule_classifier("qwv zzkx plor"), IntentLabel::of(Secondary::Faq));
        assert_eq!(rule_classifier(""), IntentLabel::of(Secondary::Faq));
    }
}
