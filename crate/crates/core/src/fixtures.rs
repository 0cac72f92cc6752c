//! Small catalogs and graphs with known answers, shared by tests, examples
//! and the shipped config files.

use crate::graph::{Edge, Graph};
use crate::utility::{Completion, Item, ItemCatalog, ItemSet, NoiseSpec};

fn catalog(items: &[(&str, f64)], values: &[(ItemSet, f64)], completion: Completion) -> ItemCatalog {
    let items = items.iter().map(|&(n, p)| Item::new(n, p)).collect();
    ItemCatalog::new(items, values.to_vec(), completion).expect("fixture catalog is valid")
}

/// Certain (`p = 1`) directed edges over `n` nodes.
pub fn certain_graph(n: usize, edges: &[(u32, u32)]) -> Graph {
    let edges = edges
        .iter()
        .map(|&(source, target)| Edge {
            source,
            target,
            prob: 1.0,
        })
        .collect();
    Graph::from_edges(n, edges).expect("fixture graph is valid")
}

/// Three items; singles worth 5, 7, 5 and every bundle worth 7; prices 1, 4, 1.
pub fn fig3a() -> ItemCatalog {
    catalog(
        &[("i1", 1.0), ("i2", 4.0), ("i3", 1.0)],
        &[
            (0b001, 5.0),
            (0b010, 7.0),
            (0b100, 5.0),
            (0b011, 7.0),
            (0b101, 7.0),
            (0b110, 7.0),
            (0b111, 7.0),
        ],
        Completion::Strict,
    )
}

/// Two nodes `u = 0`, `v = 1` and the certain edge `u -> v`.
pub fn two_node_graph() -> Graph {
    certain_graph(2, &[(0, 1)])
}

/// Four items with `c = 0.4`; `i4` is far better than the rest.
pub fn table1() -> ItemCatalog {
    catalog(
        &[("i1", 10.0), ("i2", 100.0), ("i3", 100.0), ("i4", 1.0)],
        &[
            (0b0001, 15.1),
            (0b0010, 105.0),
            (0b0100, 105.0),
            (0b1000, 101.0),
            (0b0011, 114.9),
            (0b0101, 114.9),
            (0b1001, 116.1),
            (0b0110, 210.0),
            (0b1010, 206.0),
            (0b1100, 206.0),
            (0b0111, 214.6),
            (0b1011, 214.0),
            (0b1101, 214.0),
            (0b1110, 210.5),
            (0b1111, 214.6),
        ],
        Completion::Strict,
    )
}

/// Two-item configurations `C1..=C4` with `N(0, 1)` noise on both items and
/// their budgets `(b_i, b_j)`.
pub fn table2(config: u8) -> (ItemCatalog, [usize; 2]) {
    let (vj, vij, budgets) = match config {
        1 => (4.9, 4.9, [10, 10]),
        2 => (4.1, 4.1, [10, 10]),
        3 => (4.9, 8.7, [10, 10]),
        4 => (4.9, 8.7, [50, 30]),
        _ => panic!("configurations are numbered 1 to 4"),
    };
    let noise = NoiseSpec::Gaussian { sigma: 1.0 };
    let items = vec![
        Item::new("i", 3.0).with_noise(noise),
        Item::new("j", 4.0).with_noise(noise),
    ];
    let c = ItemCatalog::new(items, vec![(0b01, 4.0), (0b10, vj), (0b11, vij)], Completion::Strict)
        .expect("fixture catalog is valid");
    (c, budgets)
}

/// Three items: `U(i) = 2`, `U(j) = 0.11`, `U(k) = 0.1`, `U({i,k}) = 2.1`,
/// every other bundle negative.
pub fn table4() -> ItemCatalog {
    catalog(
        &[("i", 1.0), ("j", 10.0), ("k", 1.0)],
        &[
            (0b001, 3.0),
            (0b010, 10.11),
            (0b100, 1.1),
            (0b011, 10.5),
            (0b101, 4.1),
            (0b110, 10.5),
            (0b111, 10.8),
        ],
        Completion::Strict,
    )
}

/// Genre utilities 7.0, 6.8, 5.0, 4.7 at price 10; bundles completed by max,
/// so every bundle has negative utility.
pub fn table5() -> ItemCatalog {
    catalog(
        &[
            ("indie", 10.0),
            ("rock", 10.0),
            ("industrial", 10.0),
            ("progressive_metal", 10.0),
        ],
        &[(0b0001, 17.0), (0b0010, 16.8), (0b0100, 15.0), (0b1000, 14.7)],
        Completion::Max,
    )
}

/// `U(i) = 10`, `U(j) = 1`, `U({i, j}) = 0`.
pub fn two_item_competition() -> ItemCatalog {
    catalog(
        &[("i", 1.0), ("j", 10.0)],
        &[(0b01, 11.0), (0b10, 11.0), (0b11, 11.0)],
        Completion::Strict,
    )
}

/// Nodes `u, v, w, x` = 0..4 with certain edges `u->v`, `v->w`, `x->w`.
pub fn path_with_spur() -> Graph {
    certain_graph(4, &[(0, 1), (1, 2), (3, 2)])
}

/// Chain `x1 -> .. -> x10` (nodes 0..10), node `y = 10` with edges to
/// `y2 = 11` and to `x5 = 4`, and an isolated node `z = 12`.
pub fn blocking_graph() -> Graph {
    let mut edges: Vec<(u32, u32)> = (0..9).map(|v| (v, v + 1)).collect();
    edges.push((10, 11));
    edges.push((10, 4));
    certain_graph(13, &edges)
}
