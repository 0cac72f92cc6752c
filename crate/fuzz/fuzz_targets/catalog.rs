#![no_main]

use libfuzzer_sys::fuzz_target;
use uic_welfare::utility::CatalogConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = CatalogConfig::parse(text) {
        let _ = cfg.catalog.validate();
        let again = CatalogConfig::parse(&cfg.to_toml()).expect("serialized config parses");
        assert_eq!(again.budgets, cfg.budgets);
        for set in 0..=cfg.catalog.full_set() {
            assert_eq!(again.catalog.value(set).to_bits(), cfg.catalog.value(set).to_bits());
        }
    }
});
