//! A Guttman R-tree with quadratic split.

use crate::geomodel::BBox;

pub const MAX_ENTRIES: usize = 16;
pub const MIN_ENTRIES: usize = 6;

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf(Vec<(BBox, T)>),
    Inner(Vec<(BBox, Box<Node<T>>)>),
}

impl<T> Node<T> {
    fn len(&self) -> usize {
        match self {
            Node::Leaf(e) => e.len(),
            Node::Inner(c) => c.len(),
        }
    }

    fn mbr(&self) -> Option<BBox> {
        match self {
            Node::Leaf(e) => union_all(e.iter().map(|(b, _)| *b)),
            Node::Inner(c) => union_all(c.iter().map(|(b, _)| *b)),
        }
    }
}

fn union_all(mut it: impl Iterator<Item = BBox>) -> Option<BBox> {
    let first = it.next()?;
    Some(it.fold(first, |a, b| a.union(&b)))
}

fn enlargement(current: &BBox, add: &BBox) -> f64 {
    current.union(add).area() - current.area()
}

/// Splits an overfull entry list into two groups of at least
/// [`MIN_ENTRIES`] each.
fn quadratic_split<E>(mut entries: Vec<E>, bbox: impl Fn(&E) -> BBox) -> (Vec<E>, Vec<E>) {
    let n = entries.len();
    let (mut s1, mut s2, mut worst) = (0, 1, f64::NEG_INFINITY);
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (bbox(&entries[i]), bbox(&entries[j]));
            let d = a.union(&b).area() - a.area() - b.area();
            if d > worst {
                (s1, s2, worst) = (i, j, d);
            }
        }
    }
    let e2 = entries.swap_remove(s2);
    let e1 = entries.swap_remove(s1);
    let (mut bb1, mut bb2) = (bbox(&e1), bbox(&e2));
    let (mut g1, mut g2) = (vec![e1], vec![e2]);

    while !entries.is_empty() {
        let rest = entries.len();
        if g1.len() + rest == MIN_ENTRIES {
            g1.append(&mut entries);
            break;
        }
        if g2.len() + rest == MIN_ENTRIES {
            g2.append(&mut entries);
            break;
        }
        let mut pick = 0;
        let mut best = f64::NEG_INFINITY;
        for (k, e) in entries.iter().enumerate() {
            let b = bbox(e);
            let diff = (enlargement(&bb1, &b) - enlargement(&bb2, &b)).abs();
            if diff > best {
                (pick, best) = (k, diff);
            }
        }
        let e = entries.swap_remove(pick);
        let b = bbox(&e);
        let (d1, d2) = (enlargement(&bb1, &b), enlargement(&bb2, &b));
        let to_first = match d1.partial_cmp(&d2) {
            Some(std::cmp::Ordering::Less) => true,
            Some(std::cmp::Ordering::Greater) => false,
            _ => match bb1.area().partial_cmp(&bb2.area()) {
                Some(std::cmp::Ordering::Less) => true,
                Some(std::cmp::Ordering::Greater) => false,
                _ => g1.len() <= g2.len(),
            },
        };
        if to_first {
            bb1 = bb1.union(&b);
            g1.push(e);
        } else {
            bb2 = bb2.union(&b);
            g2.push(e);
        }
    }
    (g1, g2)
}

/// Structural problem found by [`RTree::validate`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeViolation {
    #[error("node at depth {depth} holds {count} entries")]
    Fill { depth: usize, count: usize },
    #[error("stored MBR at depth {depth} differs from the union of its children")]
    Mbr { depth: usize },
    #[error("leaves at depths {0} and {1}")]
    UnevenLeaves(usize, usize),
    #[error("tree reports {reported} items but holds {found}")]
    Count { reported: usize, found: usize },
}

#[derive(Debug, Clone)]
pub struct RTree<T> {
    root: Node<T>,
    len: usize,
}

impl<T> Default for RTree<T> {
    fn default() -> Self {
        RTree {
            root: Node::Leaf(Vec::new()),
            len: 0,
        }
    }
}

impl<T: PartialEq> RTree<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn height(&self) -> usize {
        let mut h = 1;
        let mut node = &self.root;
        while let Node::Inner(c) = node {
            h += 1;
            node = &c[0].1;
        }
        h
    }

    pub fn insert(&mut self, bbox: BBox, item: T) {
        self.len += 1;
        if let Some(sibling) = Self::insert_into(&mut self.root, bbox, item) {
            let old = std::mem::replace(&mut self.root, Node::Leaf(Vec::new()));
            let (b1, b2) = (
                old.mbr().expect("split node is non-empty"),
                sibling.mbr().expect("split node is non-empty"),
            );
            self.root = Node::Inner(vec![(b1, Box::new(old)), (b2, Box::new(sibling))]);
        }
    }

    /// Inserts below `node`; returns the new sibling if `node` had to split.
    fn insert_into(node: &mut Node<T>, bbox: BBox, item: T) -> Option<Node<T>> {
        match node {
            Node::Leaf(entries) => {
                entries.push((bbox, item));
                if entries.len() <= MAX_ENTRIES {
                    return None;
                }
                let (a, b) = quadratic_split(std::mem::take(entries), |e| e.0);
                *entries = a;
                Some(Node::Leaf(b))
            }
            Node::Inner(children) => {
                let mut best = 0;
                let mut key = (f64::INFINITY, f64::INFINITY);
                for (i, (b, _)) in children.iter().enumerate() {
                    let k = (enlargement(b, &bbox), b.area());
                    if k < key {
                        (best, key) = (i, k);
                    }
                }
                let split = Self::insert_into(&mut children[best].1, bbox, item);
                children[best].0 = children[best].1.mbr().expect("child is non-empty");
                if let Some(sib) = split {
                    let b = sib.mbr().expect("split node is non-empty");
                    children.push((b, Box::new(sib)));
                }
                if children.len() <= MAX_ENTRIES {
                    return None;
                }
                let (a, b) = quadratic_split(std::mem::take(children), |e| e.0);
                *children = a;
                Some(Node::Inner(b))
            }
        }
    }

    /// Removes one entry equal to `(bbox, item)`. Underfull nodes are
    /// dissolved and their items reinserted.
    pub fn remove(&mut self, bbox: &BBox, item: &T) -> Option<T> {
        let mut orphans = Vec::new();
        let removed = Self::remove_from(&mut self.root, bbox, item, &mut orphans)?;
        self.len -= 1;
        loop {
            match &mut self.root {
                Node::Inner(c) if c.len() == 1 => {
                    let only = c.pop().expect("one child").1;
                    self.root = *only;
                }
                Node::Inner(c) if c.is_empty() => self.root = Node::Leaf(Vec::new()),
                _ => break,
            }
        }
        self.len -= orphans.len();
        for (b, t) in orphans {
            self.insert(b, t);
        }
        Some(removed)
    }

    fn remove_from(node: &mut Node<T>, bbox: &BBox, item: &T, orphans: &mut Vec<(BBox, T)>) -> Option<T> {
        match node {
            Node::Leaf(entries) => {
                let pos = entries.iter().position(|(b, t)| b == bbox && t == item)?;
                Some(entries.remove(pos).1)
            }
            Node::Inner(children) => {
                for i in 0..children.len() {
                    if !children[i].0.contains(bbox) {
                        continue;
                    }
                    let Some(found) = Self::remove_from(&mut children[i].1, bbox, item, orphans) else {
                        continue;
                    };
                    if children[i].1.len() < MIN_ENTRIES {
                        let (_, sub) = children.remove(i);
                        Self::drain_items(*sub, orphans);
                    } else {
                        children[i].0 = children[i].1.mbr().expect("child is non-empty");
                    }
                    return Some(found);
                }
                None
            }
        }
    }

    fn drain_items(node: Node<T>, out: &mut Vec<(BBox, T)>) {
        match node {
            Node::Leaf(e) => out.extend(e),
            Node::Inner(c) => c.into_iter().for_each(|(_, n)| Self::drain_items(*n, out)),
        }
    }

    /// Items whose box intersects `query`, boundaries included.
    pub fn search(&self, query: &BBox) -> Vec<&T> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                Node::Leaf(e) => out.extend(e.iter().filter(|(b, _)| b.intersects(query)).map(|(_, t)| t)),
                Node::Inner(c) => stack.extend(c.iter().filter(|(b, _)| b.intersects(query)).map(|(_, n)| &**n)),
            }
        }
        out
    }

    /// Checks fill factors, exact MBRs, balanced depth and the item count.
    pub fn validate(&self) -> Result<(), TreeViolation> {
        let mut leaf_depth = None;
        let mut found = 0;
        Self::check(&self.root, 0, true, &mut leaf_depth, &mut found)?;
        if found != self.len {
            return Err(TreeViolation::Count {
                reported: self.len,
                found,
            });
        }
        Ok(())
    }

    fn check(
        node: &Node<T>,
        depth: usize,
        is_root: bool,
        leaf_depth: &mut Option<usize>,
        found: &mut usize,
    ) -> Result<(), TreeViolation> {
        let count = node.len();
        let min = match (is_root, node) {
            (true, Node::Leaf(_)) => 0,
            (true, Node::Inner(_)) => 2,
            _ => MIN_ENTRIES,
        };
        if count < min || count > MAX_ENTRIES {
            return Err(TreeViolation::Fill { depth, count });
        }
        match node {
            Node::Leaf(e) => {
                *found += e.len();
                match *leaf_depth {
                    Some(d) if d != depth => return Err(TreeViolation::UnevenLeaves(d, depth)),
                    _ => *leaf_depth = Some(depth),
                }
            }
            Node::Inner(c) => {
                for (b, child) in c {
                    if child.mbr() != Some(*b) {
                        return Err(TreeViolation::Mbr { depth: depth + 1 });
                    }
                    Self::check(child, depth + 1, false, leaf_depth, found)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x: f64, y: f64, w: f64) -> BBox {
        BBox::new(x, y, x + w, y + w).unwrap()
    }

    #[test]
    fn insert_search_remove() {
        let mut t = RTree::new();
        for i in 0..300 {
            let (x, y) = ((i % 20) as f64 * 5.0 - 50.0, (i / 20) as f64 * 5.0 - 40.0);
            t.insert(bb(x, y, 1.0), i);
            t.validate().unwrap();
        }
        assert!(t.height() > 1);
        let hits = t.search(&bb(-50.0, -40.0, 6.0));
        let mut got: Vec<i32> = hits.into_iter().copied().collect();
        got.sort();
        assert_eq!(got, vec![0, 1, 20, 21]);
        for i in (0..300).step_by(2) {
            let (x, y) = ((i % 20) as f64 * 5.0 - 50.0, (i / 20) as f64 * 5.0 - 40.0);
            assert_eq!(t.remove(&bb(x, y, 1.0), &i), Some(i));
            t.validate().unwrap();
        }
        assert_eq!(t.len(), 150);
        assert_eq!(t.remove(&bb(0.0, 0.0, 1.0), &0), None);
    }

    #[test]
    fn remove_everything() {
        let mut t = RTree::new();
        for i in 0..50 {
            t.insert(bb(i as f64, 0.0, 0.5), i);
        }
        for i in 0..50 {
            t.remove(&bb(i as f64, 0.0, 0.5), &i).unwrap();
            t.validate().unwrap();
        }
        assert!(t.is_empty());
        assert_eq!(t.height(), 1);
    }

    #[test]
    fn split_respects_min_fill() {
        let entries: Vec<BBox> = (0..17)
            .map(|i| bb(if i == 0 { 100.0 } else { i as f64 * 0.01 }, 0.0, 0.001))
            .collect();
        let (a, b) = quadratic_split(entries, |b| *b);
        assert!(a.len() >= MIN_ENTRIES && b.len() >= MIN_ENTRIES);
        assert_eq!(a.len() + b.len(), 17);
    }
}
