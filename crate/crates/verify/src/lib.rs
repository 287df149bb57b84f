//! Reporting helpers for the acceptance gate in `tests/acceptance.rs`.

/// Collects criterion outcomes and prints one line per criterion.
#[derive(Debug, Default)]
pub struct Gate {
    failed: Vec<&'static str>,
}

impl Gate {
    pub fn record(&mut self, id: &'static str, title: &str, pass: bool, detail: String, secs: f64) {
        println!(
            "{} [{id}] {title}: {detail} ({secs:.2} s)",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            self.failed.push(id);
        }
    }

    pub fn failed(&self) -> &[&'static str] {
        &self.failed
    }

    /// Panics listing every failed criterion.
    pub fn finish(&self) {
        assert!(self.failed.is_empty(), "failed criteria: {:?}", self.failed);
    }
}

/// Indented diagnostic under the preceding criterion line.
pub fn note(text: String) {
    println!("       {text}");
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn gate_tracks_failures() {
        let mut gate = Gate::default();
        gate.record("a", "x", true, String::new(), 0.0);
        gate.record("b", "y", false, String::new(), 0.0);
        assert_eq!(gate.failed(), ["b"]);
    }
}
