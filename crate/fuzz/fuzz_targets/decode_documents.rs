#![no_main]

use libfuzzer_sys::fuzz_target;
use ugat::{FitResult, ReliabilityReport};
use ugat_cli::docs::{parse_reference_table, CompareResult, Document, EvalResult};

fn round_trip<T>(text: &str)
where
    T: serde::de::DeserializeOwned + serde::Serialize + PartialEq + std::fmt::Debug,
{
    if let Ok(v) = serde_json::from_str::<T>(text) {
        let back = serde_json::to_string(&v).unwrap();
        let again: T = serde_json::from_str(&back).unwrap();
        // NaN never compares equal; only finite documents must match exactly
        if back == serde_json::to_string(&again).unwrap() {
            return;
        }
        panic!("unstable round trip: {back}");
    }
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_reference_table(text);
    round_trip::<Document<FitResult>>(text);
    round_trip::<Document<EvalResult>>(text);
    round_trip::<Document<CompareResult>>(text);
    round_trip::<ReliabilityReport>(text);
});
