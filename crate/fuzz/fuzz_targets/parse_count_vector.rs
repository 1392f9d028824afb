#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(x) = ugat::parse_count_vector(text) {
        // printing and reparsing is the identity
        let again: Vec<String> = x.as_slice().iter().map(u64::to_string).collect();
        assert_eq!(ugat::parse_count_vector(&again.join(",")).unwrap(), x);
    }
});
