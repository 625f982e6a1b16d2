/// Disjoint sets over `u32` ids where each root carries a birth key and
/// merges always keep the elder root, so no rank or size is stored.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    /// `(parent, birth)` side by side so a lookup touches one cache line.
    nodes: Vec<[u32; 2]>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            nodes: (0..n as u32).map(|i| [i, 0]).collect(),
        }
    }

    #[inline]
    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        loop {
            let p = self.nodes[x as usize][0];
            if p == x {
                return x;
            }
            let gp = self.nodes[p as usize][0];
            self.nodes[x as usize][0] = gp;
            x = p;
        }
    }

    #[inline]
    pub(crate) fn birth(&self, root: u32) -> u32 {
        self.nodes[root as usize][1]
    }

    #[inline]
    pub(crate) fn set_birth(&mut self, root: u32, key: u32) {
        self.nodes[root as usize][1] = key;
    }

    /// `(birth, id)` packed so that comparing keys compares births first.
    #[inline]
    pub(crate) fn key(&self, x: u32) -> u64 {
        ((self.nodes[x as usize][1] as u64) << 32) | x as u64
    }

    /// Hints the cache to load node `x`; ids past the end are ignored.
    #[inline]
    pub(crate) fn prefetch(&self, x: u32) {
        #[cfg(target_arch = "x86_64")]
        if let Some(node) = self.nodes.get(x as usize) {
            // SAFETY: prefetching is a hint and never faults; the pointer is in bounds
            unsafe {
                std::arch::x86_64::_mm_prefetch::<{ std::arch::x86_64::_MM_HINT_T0 }>(node.as_ptr().cast());
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        let _ = x;
    }

    /// Hangs root `younger` under root `elder`.
    #[inline]
    pub(crate) fn attach(&mut self, younger: u32, elder: u32) {
        debug_assert_ne!(younger, elder);
        self.nodes[younger as usize][0] = elder;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attach_and_find() {
        let mut uf = UnionFind::new(5);
        for i in 0..5 {
            uf.set_birth(i, i * 10);
        }
        uf.attach(1, 0);
        assert_eq!(uf.find(1), 0);
        uf.attach(4, 3);
        let r = uf.find(4);
        uf.attach(r, 0);
        assert_eq!(uf.find(4), 0);
        assert_eq!(uf.find(0), uf.find(3));
        assert_ne!(uf.find(2), uf.find(3));
        let root = uf.find(3);
        assert_eq!(uf.birth(root), 0);
        assert!(uf.key(2) < uf.key(3));
        assert_eq!(uf.key(3), (30 << 32) | 3);
    }
}
