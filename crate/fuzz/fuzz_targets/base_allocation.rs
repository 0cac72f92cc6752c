#![no_main]

use libfuzzer_sys::fuzz_target;
use uic_welfare::{fixtures, Allocation};

fuzz_target!(|data: &[u8]| {
    let catalog = fixtures::table1();
    if let Ok(a) = Allocation::parse(data, &catalog) {
        let back = Allocation::parse(a.to_text(&catalog).as_bytes(), &catalog).unwrap();
        assert_eq!(back, a);
    }
});
