#![no_main]

use libfuzzer_sys::fuzz_target;
use uic_welfare::graph::{remap_edge_list, DuplicatePolicy, LoadOptions};
use uic_welfare::Graph;

fuzz_target!(|data: &[u8]| {
    for undirected in [false, true] {
        let opts = LoadOptions { duplicates: DuplicatePolicy::MergeMax, undirected };
        if let Ok(g) = Graph::load_edge_list_with_header(data, opts) {
            let mut text = Vec::new();
            g.write_edge_list(&mut text).unwrap();
            let back = Graph::load_edge_list_with_header(text.as_slice(), LoadOptions::default()).unwrap();
            assert_eq!(back.node_count(), g.node_count());
            assert_eq!(back.edges(), g.edges());
        }
    }
    let _ = remap_edge_list(data);
});
