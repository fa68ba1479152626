//! Deterministic demo documents and the synthetic evaluation corpus.
//!
//! Everything here is seeded and reproducible; the corpus generator injects
//! repeated motifs (consecutive runs for loops, separated repeats for
//! standalone instances) between unique filler so mining has known structure
//! to recover.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::BoxItem;
use crate::model::{BBox, NodeId, NodeKind, Payload, UiNode, UiTree};

/// Build a tree from `(id, kind, value, children)` rows; the first row is the
/// root. Payload type follows the kind; containers ignore `value`.
pub fn tree_of(spec: &[(u32, &str, &str, &[u32])]) -> UiTree {
    let nodes = spec
        .iter()
        .map(|(id, kind, val, children)| {
            let kind = NodeKind::parse(kind).expect("known kind");
            UiNode {
                id: NodeId(*id),
                kind,
                bbox: None,
                payload: payload_for(kind, val),
                children: children.iter().map(|c| NodeId(*c)).collect(),
            }
        })
        .collect();
    UiTree::new(NodeId(spec[0].0), nodes).expect("valid fixture tree")
}

fn payload_for(kind: NodeKind, val: &str) -> Payload {
    match kind {
        NodeKind::Text => Payload::Text(val.to_string()),
        NodeKind::Media => Payload::ImageSrc(val.to_string()),
        NodeKind::Link => Payload::Url(val.to_string()),
        NodeKind::Control => {
            if val.is_empty() {
                Payload::None
            } else {
                Payload::Placeholder(val.to_string())
            }
        }
        _ => Payload::None,
    }
}

/// Incremental tree builder with sequential ids.
pub struct TreeBuilder {
    nodes: Vec<UiNode>,
}

impl TreeBuilder {
    pub fn new() -> TreeBuilder {
        TreeBuilder { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&mut self, kind: NodeKind, payload: Payload) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(UiNode {
            id,
            kind,
            bbox: None,
            payload,
            children: vec![],
        });
        id
    }

    pub fn container(&mut self, kind: NodeKind) -> NodeId {
        self.node(kind, Payload::None)
    }

    pub fn attach(&mut self, parent: NodeId, child: NodeId) {
        self.nodes[parent.0 as usize].children.push(child);
    }

    pub fn finish(self, root: NodeId) -> UiTree {
        UiTree::new(root, self.nodes).expect("builder produces valid trees")
    }
}

impl Default for TreeBuilder {
    fn default() -> Self {
        TreeBuilder::new()
    }
}

/// A 4-node product card: `tile[media, text, link]`.
fn card(b: &mut TreeBuilder, serial: usize) -> NodeId {
    let tile = b.container(NodeKind::Tile);
    let m = b.node(NodeKind::Media, Payload::ImageSrc(format!("assets/img_{serial}.png")));
    let t = b.node(NodeKind::Text, Payload::Text(format!("Item {serial}")));
    let l = b.node(NodeKind::Link, Payload::Url(format!("https://shop.example/p/{serial}")));
    b.attach(tile, m);
    b.attach(tile, t);
    b.attach(tile, l);
    tile
}

/// A 5-node card: `tile[media, text, text, link]`.
fn wide_card(b: &mut TreeBuilder, serial: usize) -> NodeId {
    let tile = b.container(NodeKind::Tile);
    let m = b.node(NodeKind::Media, Payload::ImageSrc(format!("assets/img_{serial}.png")));
    let t1 = b.node(NodeKind::Text, Payload::Text(format!("Item {serial}")));
    let t2 = b.node(NodeKind::Text, Payload::Text(format!("Detail {serial}")));
    let l = b.node(NodeKind::Link, Payload::Url(format!("https://shop.example/p/{serial}")));
    for c in [m, t1, t2, l] {
        b.attach(tile, c);
    }
    tile
}

/// `frame -> stack -> n` identical-structure cards with varying payloads.
pub fn repeated_cards(n: usize) -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Frame);
    let stack = b.container(NodeKind::Stack);
    b.attach(root, stack);
    for i in 0..n {
        let c = card(&mut b, i);
        b.attach(stack, c);
    }
    b.finish(root)
}

/// Cards whose text is the same in every occurrence, so only the media lifts
/// to a prop.
pub fn cards_with_constant_text(n: usize) -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Frame);
    let stack = b.container(NodeKind::Stack);
    b.attach(root, stack);
    for i in 0..n {
        let tile = b.container(NodeKind::Tile);
        let m = b.node(NodeKind::Media, Payload::ImageSrc(format!("assets/img_{i}.png")));
        let t = b.node(NodeKind::Text, Payload::Text("Buy now".into()));
        b.attach(tile, m);
        b.attach(tile, t);
        b.attach(stack, tile);
    }
    b.finish(root)
}

/// Cards separated by unique text leaves; repeated instances that never form
/// a consecutive run.
pub fn interleaved_cards() -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Frame);
    let stack = b.container(NodeKind::Stack);
    b.attach(root, stack);
    for i in 0..4 {
        let c = card(&mut b, i);
        b.attach(stack, c);
        if i < 3 {
            let sep = b.node(NodeKind::Text, Payload::Text(format!("Separator {i}")));
            b.attach(stack, sep);
        }
    }
    b.finish(root)
}

/// Two structurally different motifs in disjoint parts of the page.
pub fn two_disjoint_motifs() -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Frame);
    let top = b.container(NodeKind::Stack);
    let bottom = b.container(NodeKind::Stack);
    b.attach(root, top);
    b.attach(root, bottom);
    for i in 0..2 {
        let tile = b.container(NodeKind::Tile);
        let m = b.node(NodeKind::Media, Payload::ImageSrc(format!("a_{i}.png")));
        let t = b.node(NodeKind::Text, Payload::Text(format!("A {i}")));
        b.attach(tile, m);
        b.attach(tile, t);
        b.attach(top, tile);
    }
    for i in 0..2 {
        let row = b.container(NodeKind::Row);
        let t1 = b.node(NodeKind::Text, Payload::Text(format!("B left {i}")));
        let t2 = b.node(NodeKind::Link, Payload::Url(format!("https://b.example/{i}")));
        b.attach(row, t1);
        b.attach(row, t2);
        b.attach(bottom, row);
    }
    b.finish(root)
}

/// Nested repetition inside 15 nodes: two identical rows, each holding two
/// identical small cards. The rows outscore the cards and starve them, and
/// greedy coverage (14 nodes) equals the exhaustive optimum.
pub fn nested_motif_fixture() -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Stack);
    for r in 0..2 {
        let row = b.container(NodeKind::Row);
        b.attach(root, row);
        for c in 0..2 {
            let tile = b.container(NodeKind::Tile);
            let m = b.node(NodeKind::Media, Payload::ImageSrc(format!("img_{r}{c}.png")));
            let t = b.node(NodeKind::Text, Payload::Text(format!("Cell {r}{c}")));
            b.attach(tile, m);
            b.attach(tile, t);
            b.attach(row, tile);
        }
    }
    b.finish(root)
}

/// The large starvation layout: three 16-node rows of three 5-node cards plus
/// three more cards elsewhere. The card motif (support 12, score 60) packs
/// before the row motif (support 3, score 48) and claims every row interior.
pub fn starved_outer_fixture() -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Frame);
    let grid = b.container(NodeKind::Stack);
    let extras = b.container(NodeKind::Stack);
    b.attach(root, grid);
    b.attach(root, extras);
    let mut serial = 0;
    for _ in 0..3 {
        let row = b.container(NodeKind::Row);
        b.attach(grid, row);
        for _ in 0..3 {
            let c = wide_card(&mut b, serial);
            serial += 1;
            b.attach(row, c);
        }
    }
    for _ in 0..3 {
        let c = wide_card(&mut b, serial);
        serial += 1;
        b.attach(extras, c);
    }
    b.finish(root)
}

/// Two near-duplicate card shapes, sizes 5 and 6; the larger one carries one
/// extra trailing link, so the canonical edit distance between the skeletons
/// is exactly 1.
pub fn card_variants_fixture() -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Frame);
    let stack = b.container(NodeKind::Stack);
    b.attach(root, stack);
    for i in 0..2 {
        let c = wide_card(&mut b, i);
        b.attach(stack, c);
    }
    for i in 2..4 {
        let tile = b.container(NodeKind::Tile);
        let m = b.node(NodeKind::Media, Payload::ImageSrc(format!("assets/img_{i}.png")));
        let t1 = b.node(NodeKind::Text, Payload::Text(format!("Item {i}")));
        let t2 = b.node(NodeKind::Text, Payload::Text(format!("Detail {i}")));
        let l1 = b.node(NodeKind::Link, Payload::Url(format!("https://shop.example/p/{i}")));
        let l2 = b.node(NodeKind::Link, Payload::Url(format!("https://shop.example/extra/{i}")));
        for c in [m, t1, t2, l1, l2] {
            b.attach(tile, c);
        }
        b.attach(stack, tile);
    }
    b.finish(root)
}

/// Controls whose placeholder is present in some occurrences and absent in
/// others; merging at a permissive threshold produces one template with a
/// placeholder slot bound to the absent payload where the text is missing.
pub fn control_variants_fixture() -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Frame);
    let stack = b.container(NodeKind::Stack);
    b.attach(root, stack);
    for i in 0..2 {
        let row = b.container(NodeKind::Row);
        let t = b.node(NodeKind::Text, Payload::Text(format!("Field {i}")));
        let c = b.node(NodeKind::Control, Payload::Placeholder(format!("Enter {i}")));
        let m = b.node(NodeKind::Media, Payload::ImageSrc(format!("icon_{i}.png")));
        let l = b.node(NodeKind::Link, Payload::Url(format!("https://help.example/{i}")));
        let x = b.node(NodeKind::Text, Payload::Text(format!("Hint {i}")));
        let y = b.node(NodeKind::Text, Payload::Text(format!("Unit {i}")));
        for n in [t, c, m, l, x, y] {
            b.attach(row, n);
        }
        b.attach(stack, row);
    }
    for i in 2..4 {
        let row = b.container(NodeKind::Row);
        let t = b.node(NodeKind::Text, Payload::Text(format!("Field {i}")));
        let c = b.node(NodeKind::Control, Payload::None);
        let m = b.node(NodeKind::Media, Payload::ImageSrc(format!("icon_{i}.png")));
        let l = b.node(NodeKind::Link, Payload::Url(format!("https://help.example/{i}")));
        let x = b.node(NodeKind::Text, Payload::Text(format!("Hint {i}")));
        let y = b.node(NodeKind::Text, Payload::Text(format!("Unit {i}")));
        for n in [t, c, m, l, x, y] {
            b.attach(row, n);
        }
        b.attach(stack, row);
    }
    b.finish(root)
}

/// Showcase document: a header with repeated nav entries, a product grid of
/// repeated cards, and a distinct footer.
pub fn demo_document() -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Frame);

    let header = b.container(NodeKind::Stack);
    b.attach(root, header);
    let title = b.node(NodeKind::Text, Payload::Text("Acme Storefront".into()));
    b.attach(header, title);
    let nav = b.container(NodeKind::Row);
    b.attach(header, nav);
    for (label, href) in [
        ("Home", "https://acme.example/"),
        ("Products", "https://acme.example/products"),
        ("About", "https://acme.example/about"),
    ] {
        let item = b.container(NodeKind::Tile);
        let t = b.node(NodeKind::Text, Payload::Text(label.into()));
        let l = b.node(NodeKind::Link, Payload::Url(href.into()));
        b.attach(item, t);
        b.attach(item, l);
        b.attach(nav, item);
    }

    let grid = b.container(NodeKind::Stack);
    b.attach(root, grid);
    for i in 0..4 {
        let c = wide_card(&mut b, i);
        b.attach(grid, c);
    }

    let footer = b.container(NodeKind::Row);
    b.attach(root, footer);
    let note = b.node(NodeKind::Text, Payload::Text("© Acme & Co <2026>".into()));
    let contact = b.node(NodeKind::Link, Payload::Url("https://acme.example/contact".into()));
    let search = b.node(NodeKind::Control, Payload::Placeholder("Search \"products\"".into()));
    b.attach(footer, note);
    b.attach(footer, contact);
    b.attach(footer, search);
    b.finish(root)
}

/// A 3x3 grid of detected boxes that groups into rows of card tiles.
pub fn demo_boxes() -> Vec<BoxItem> {
    let mut items = Vec::new();
    for r in 0..3 {
        for c in 0..3 {
            let serial = r * 3 + c;
            let x0 = 0.05 + c as f64 * 0.35;
            let y0 = 0.05 + r as f64 * 0.35;
            items.push(BoxItem {
                kind: NodeKind::Media,
                bbox: BBox::new(x0, y0, x0 + 0.20, y0 + 0.08).unwrap(),
                payload: Payload::ImageSrc(format!("assets/img_{serial}.png")),
            });
            items.push(BoxItem {
                kind: NodeKind::Text,
                bbox: BBox::new(x0, y0 + 0.10, x0 + 0.20, y0 + 0.14).unwrap(),
                payload: Payload::Text(format!("Item {serial}")),
            });
            items.push(BoxItem {
                kind: NodeKind::Link,
                bbox: BBox::new(x0, y0 + 0.16, x0 + 0.20, y0 + 0.19).unwrap(),
                payload: Payload::Url(format!("https://shop.example/p/{serial}")),
            });
        }
    }
    items
}

// ── synthetic corpus ────────────────────────────────────────────────────

/// Occasionally spice payload text with characters that must survive
/// escaping end to end.
fn spice(rng: &mut ChaCha8Rng, base: String) -> String {
    match rng.gen_range(0..8) {
        0 => format!("{base} & more"),
        1 => format!("<{base}>"),
        2 => format!("\"{base}\""),
        3 => format!("{base} 'quoted'"),
        _ => base,
    }
}

#[derive(Clone)]
struct MotifShape {
    leaves: Vec<NodeKind>,
}

fn random_motif(rng: &mut ChaCha8Rng) -> MotifShape {
    let n = rng.gen_range(2..=4);
    let pool = [NodeKind::Media, NodeKind::Text, NodeKind::Link, NodeKind::Control, NodeKind::Text];
    let leaves = (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
    MotifShape { leaves }
}

fn instantiate_motif(
    b: &mut TreeBuilder,
    shape: &MotifShape,
    serial: &mut usize,
    rng: &mut ChaCha8Rng,
) -> NodeId {
    let tile = b.container(NodeKind::Tile);
    for kind in &shape.leaves {
        *serial += 1;
        let payload = match kind {
            NodeKind::Media => Payload::ImageSrc(format!("assets/m_{serial}.png")),
            NodeKind::Text => Payload::Text(spice(rng, format!("Text {serial}"))),
            NodeKind::Link => Payload::Url(format!("https://corpus.example/x/{serial}")),
            NodeKind::Control => Payload::Placeholder(spice(rng, format!("Input {serial}"))),
            _ => Payload::None,
        };
        let leaf = b.node(*kind, payload);
        b.attach(tile, leaf);
    }
    tile
}

fn filler_leaf(b: &mut TreeBuilder, serial: &mut usize, rng: &mut ChaCha8Rng) -> NodeId {
    *serial += 1;
    match rng.gen_range(0..4) {
        0 => b.node(NodeKind::Media, Payload::ImageSrc(format!("assets/f_{serial}.png"))),
        1 => b.node(NodeKind::Link, Payload::Url(format!("https://corpus.example/f/{serial}"))),
        2 => b.node(NodeKind::Control, Payload::Placeholder(format!("Filler {serial}"))),
        _ => b.node(NodeKind::Text, Payload::Text(spice(rng, format!("Filler {serial}")))),
    }
}

/// One synthetic document with injected repeated motifs: consecutive runs
/// (future loop groups), separated repeats (standalone instances), and unique
/// filler.
pub fn synthetic_document(seed: u64) -> UiTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Frame);
    let target = rng.gen_range(20..=200);
    let mut serial = 0usize;
    while b.len() < target {
        match rng.gen_range(0..4) {
            // consecutive run of one motif: a future loop group
            0 | 1 => {
                let section = b.container(NodeKind::Stack);
                b.attach(root, section);
                let shape = random_motif(&mut rng);
                let k = rng.gen_range(2..=5);
                for _ in 0..k {
                    let m = instantiate_motif(&mut b, &shape, &mut serial, &mut rng);
                    b.attach(section, m);
                }
            }
            // separated repeats: same motif with filler between occurrences
            2 => {
                let section = b.container(NodeKind::Row);
                b.attach(root, section);
                let shape = random_motif(&mut rng);
                let first = instantiate_motif(&mut b, &shape, &mut serial, &mut rng);
                b.attach(section, first);
                let sep = filler_leaf(&mut b, &mut serial, &mut rng);
                b.attach(section, sep);
                let second = instantiate_motif(&mut b, &shape, &mut serial, &mut rng);
                b.attach(section, second);
            }
            // unique filler
            _ => {
                let section = b.container(NodeKind::Row);
                b.attach(root, section);
                for _ in 0..rng.gen_range(2..=4) {
                    let leaf = filler_leaf(&mut b, &mut serial, &mut rng);
                    b.attach(section, leaf);
                }
            }
        }
    }
    b.finish(root)
}

/// The named evaluation corpus: `count` documents of 20-200 nodes each.
pub fn synthetic_corpus(seed: u64, count: usize) -> Vec<(String, UiTree)> {
    (0..count)
        .map(|i| {
            let doc_seed = seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            (format!("doc_{i:03}"), synthetic_document(doc_seed))
        })
        .collect()
}

/// The 10k-node performance tree: distinct-arity sections of repeated cards,
/// padded with unique leaves to land exactly on `total` nodes.
pub fn performance_tree(total: usize) -> UiTree {
    let mut b = TreeBuilder::new();
    let root = b.container(NodeKind::Stack);
    let mut serial = 0usize;
    let mut section_arity = 90;
    while b.len() + 6 + section_arity * 4 < total {
        let section = b.container(NodeKind::Frame);
        b.attach(root, section);
        for _ in 0..section_arity {
            let c = card(&mut b, serial);
            serial += 1;
            b.attach(section, c);
        }
        section_arity += 1; // distinct arities keep sections out of one bucket
    }
    while b.len() < total {
        serial += 1;
        let leaf = b.node(NodeKind::Text, Payload::Text(format!("Pad {serial}")));
        b.attach(root, leaf);
    }
    b.finish(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_in_range() {
        let a = synthetic_corpus(7, 25);
        let b = synthetic_corpus(7, 25);
        assert_eq!(a.len(), 25);
        for ((na, ta), (nb, tb)) in a.iter().zip(b.iter()) {
            assert_eq!(na, nb);
            assert_eq!(ta, tb);
            assert!(ta.len() >= 20 && ta.len() <= 220, "{} nodes", ta.len());
        }
    }

    #[test]
    fn performance_tree_hits_target() {
        let t = performance_tree(10_000);
        assert_eq!(t.len(), 10_000);
    }

    #[test]
    fn fixtures_have_documented_shapes() {
        assert_eq!(nested_motif_fixture().len(), 15);
        let sv = starved_outer_fixture();
        assert_eq!(sv.len(), 3 + 3 * 16 + 3 * 5);
        assert_eq!(card_variants_fixture().len(), 2 + 2 * 5 + 2 * 6);
    }
}
