#![no_main]

use libfuzzer_sys::fuzz_target;
use uic_welfare::utility::{parse_probability_list, utilities_from_probabilities};

fuzz_target!(|data: &[u8]| {
    if let Ok(list) = parse_probability_list(data) {
        let probs: Vec<f64> = list.iter().map(|x| x.1).collect();
        assert!(probs.iter().all(|p| *p > 0.0 && *p <= 1.0));
        let _ = utilities_from_probabilities(&probs, 10_000.0);
    }
});
