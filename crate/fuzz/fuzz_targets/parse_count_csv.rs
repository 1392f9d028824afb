#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = ugat::parse_count_csv(text) {
        assert!(!d.is_empty());
        assert!(d.rows.iter().all(|r| r.len() == d.dim()));
        let st = d.stats();
        assert_eq!(st.n, d.len());
    }
});
