//! Maximum-weight matching in general graphs (Edmonds' blossom algorithm in
//! Galil's primal-dual formulation), O(n³).
//!
//! With `max_cardinality` the solution is restricted to maximum-cardinality
//! matchings; combined with negated weights this realizes minimum-weight
//! perfect matching. Weights are f64; determinism follows from the fixed
//! edge order.

const NONE: usize = usize::MAX;

struct Matcher<'a> {
    nvertex: usize,
    edges: &'a [(usize, usize, f64)],
    max_cardinality: bool,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Vec<usize>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<f64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

/// Returns `mate[v] = Some(u)` for matched pairs.
pub fn max_weight_matching(
    nvertex: usize,
    edges: &[(usize, usize, f64)],
    max_cardinality: bool,
) -> Vec<Option<usize>> {
    if edges.is_empty() || nvertex == 0 {
        return vec![None; nvertex];
    }
    for &(i, j, _) in edges {
        assert!(i != j && i < nvertex && j < nvertex, "bad edge ({i},{j})");
    }
    let mut m = Matcher::new(nvertex, edges, max_cardinality);
    m.run();
    (0..nvertex)
        .map(|v| if m.mate[v] == NONE { None } else { Some(m.endpoint[m.mate[v]]) })
        .collect()
}

impl<'a> Matcher<'a> {
    fn new(nvertex: usize, edges: &'a [(usize, usize, f64)], max_cardinality: bool) -> Self {
        let nedge = edges.len();
        let max_weight = edges.iter().map(|e| e.2).fold(0.0f64, f64::max);
        let endpoint: Vec<usize> = (0..2 * nedge)
            .map(|p| if p % 2 == 0 { edges[p / 2].0 } else { edges[p / 2].1 })
            .collect();
        let mut neighbend: Vec<Vec<usize>> = vec![Vec::new(); nvertex];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        Self {
            nvertex,
            edges,
            max_cardinality,
            endpoint,
            neighbend,
            mate: vec![NONE; nvertex],
            label: vec![0; 2 * nvertex],
            labelend: vec![NONE; 2 * nvertex],
            inblossom: (0..nvertex).collect(),
            blossomparent: vec![NONE; 2 * nvertex],
            blossomchilds: vec![Vec::new(); 2 * nvertex],
            blossombase: (0..nvertex).chain(std::iter::repeat(NONE)).take(2 * nvertex).collect(),
            blossomendps: vec![Vec::new(); 2 * nvertex],
            bestedge: vec![NONE; 2 * nvertex],
            blossombestedges: vec![Vec::new(); 2 * nvertex],
            unusedblossoms: (nvertex..2 * nvertex).collect(),
            dualvar: std::iter::repeat(max_weight)
                .take(nvertex)
                .chain(std::iter::repeat(0.0).take(nvertex))
                .collect(),
            allowedge: vec![false; nedge],
            queue: Vec::new(),
        }
    }

    fn slack(&self, k: usize) -> f64 {
        let (i, j, wt) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2.0 * wt
    }

    fn blossom_leaves(&self, b: usize, out: &mut Vec<usize>) {
        if b < self.nvertex {
            out.push(b);
        } else {
            for &t in &self.blossomchilds[b] {
                self.blossom_leaves(t, out);
            }
        }
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let mut leaves = Vec::new();
            self.blossom_leaves(b, &mut leaves);
            self.queue.extend(leaves);
        } else {
            let base = self.blossombase[b];
            debug_assert!(self.mate[base] != NONE);
            self.assign_label(self.endpoint[self.mate[base]], 1, self.mate[base] ^ 1);
        }
    }

    /// Traces back from v and w; returns the common ancestor base vertex or
    /// NONE when an augmenting path has been found.
    fn scan_blossom(&mut self, v: usize, w: usize) -> usize {
        let mut path: Vec<usize> = Vec::new();
        let mut base = NONE;
        let mut v = v;
        let mut w = w;
        while v != NONE || w != NONE {
            if v != NONE {
                let b = self.inblossom[v];
                if self.label[b] & 4 != 0 {
                    base = self.blossombase[b];
                    break;
                }
                debug_assert_eq!(self.label[b], 1);
                path.push(b);
                self.label[b] = 5;
                debug_assert_eq!(self.labelend[b], self.mate[self.blossombase[b]]);
                if self.labelend[b] == NONE {
                    v = NONE;
                } else {
                    let t = self.endpoint[self.labelend[b]];
                    let bt = self.inblossom[t];
                    debug_assert_eq!(self.label[bt], 2);
                    debug_assert!(self.labelend[bt] != NONE);
                    v = self.endpoint[self.labelend[bt]];
                }
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("free blossom id");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;

        let mut path: Vec<usize> = Vec::new();
        let mut endps: Vec<usize> = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            path.push(bv);
            endps.push(self.labelend[bv]);
            debug_assert!(
                self.label[bv] == 2
                    || (self.label[bv] == 1
                        && self.labelend[bv] == self.mate[self.blossombase[bv]])
            );
            debug_assert!(self.labelend[bv] != NONE);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            path.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            debug_assert!(
                self.label[bw] == 2
                    || (self.label[bw] == 1
                        && self.labelend[bw] == self.mate[self.blossombase[bw]])
            );
            debug_assert!(self.labelend[bw] != NONE);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }

        debug_assert_eq!(self.label[bb], 1);
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0.0;
        self.blossomchilds[b] = path;
        self.blossomendps[b] = endps;

        let mut leaves = Vec::new();
        self.blossom_leaves(b, &mut leaves);
        for &leaf in &leaves {
            if self.label[self.inblossom[leaf]] == 2 {
                self.queue.push(leaf);
            }
            self.inblossom[leaf] = b;
        }

        let mut bestedgeto = vec![NONE; 2 * self.nvertex];
        for child_idx in 0..self.blossomchilds[b].len() {
            let bv = self.blossomchilds[b][child_idx];
            let nblists: Vec<Vec<usize>> = if self.blossombestedges[bv].is_empty() {
                let mut lv = Vec::new();
                self.blossom_leaves(bv, &mut lv);
                lv.iter()
                    .map(|&v2| self.neighbend[v2].iter().map(|&p| p / 2).collect())
                    .collect()
            } else {
                vec![self.blossombestedges[bv].clone()]
            };
            for nblist in nblists {
                for k2 in nblist {
                    let (i, j, _) = self.edges[k2];
                    let j = if self.inblossom[j] == b { i } else { j };
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE
                            || self.slack(k2) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k2;
                    }
                }
            }
            self.blossombestedges[bv].clear();
            self.bestedge[bv] = NONE;
        }
        self.blossombestedges[b] = bestedgeto.into_iter().filter(|&k2| k2 != NONE).collect();
        self.bestedge[b] = NONE;
        for idx in 0..self.blossombestedges[b].len() {
            let k2 = self.blossombestedges[b][idx];
            if self.bestedge[b] == NONE || self.slack(k2) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = k2;
            }
        }
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = NONE;
            if s < self.nvertex {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0.0 {
                self.expand_blossom(s, endstage);
            } else {
                let mut lv = Vec::new();
                self.blossom_leaves(s, &mut lv);
                for &v in &lv {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            debug_assert!(self.labelend[b] != NONE);
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let len = self.blossomchilds[b].len() as isize;
            let idx = |x: isize| -> usize { x.rem_euclid(len) as usize };
            let mut j =
                self.blossomchilds[b].iter().position(|&c| c == entrychild).unwrap() as isize;
            let (jstep, endptrick): (isize, isize) = if j & 1 != 0 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b];
            while j != 0 {
                // Relabel the T-sub-blossom.
                self.label[self.endpoint[p ^ 1]] = 0;
                self.label[self.endpoint
                    [idx_endp(&self.blossomendps[b], j - endptrick, endptrick, len) ^ 1]] = 0;
                self.assign_label(self.endpoint[p ^ 1], 2, p);
                self.allowedge
                    [idx_endp(&self.blossomendps[b], j - endptrick, endptrick, len) / 2] = true;
                j += jstep;
                p = idx_endp(&self.blossomendps[b], j - endptrick, endptrick, len);
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            // The entry sub-blossom keeps the T label.
            let bv = self.blossomchilds[b][idx(j)];
            self.label[self.endpoint[p ^ 1]] = 2;
            self.label[bv] = 2;
            self.labelend[self.endpoint[p ^ 1]] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            // Leave remaining sub-blossoms unlabeled (relabel any with a
            // labeled leaf).
            let mut j2 = j + jstep;
            while self.blossomchilds[b][idx(j2)] != entrychild {
                let bv2 = self.blossomchilds[b][idx(j2)];
                if self.label[bv2] == 1 {
                    j2 += jstep;
                    continue;
                }
                let mut lv = Vec::new();
                self.blossom_leaves(bv2, &mut lv);
                let mut labeled_leaf = NONE;
                for &v in &lv {
                    if self.label[v] != 0 {
                        labeled_leaf = v;
                        break;
                    }
                }
                if labeled_leaf != NONE {
                    debug_assert_eq!(self.label[labeled_leaf], 2);
                    debug_assert_eq!(self.inblossom[labeled_leaf], bv2);
                    self.label[labeled_leaf] = 0;
                    self.label[self.endpoint[self.mate[self.blossombase[bv2]]]] = 0;
                    let le = self.labelend[labeled_leaf];
                    self.assign_label(labeled_leaf, 2, le);
                }
                j2 += jstep;
            }
        }
        self.label[b] = 0;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b].clear();
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.nvertex {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len() as isize;
        let idx = |x: isize| -> usize { x.rem_euclid(len) as usize };
        let i = self.blossomchilds[b].iter().position(|&c| c == t).unwrap() as isize;
        let mut j = i;
        let (jstep, endptrick): (isize, isize) = if i & 1 != 0 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t1 = self.blossomchilds[b][idx(j)];
            let p = idx_endp(&self.blossomendps[b], j - endptrick, endptrick, len);
            if t1 >= self.nvertex {
                self.augment_blossom(t1, self.endpoint[p]);
            }
            j += jstep;
            let t2 = self.blossomchilds[b][idx(j)];
            if t2 >= self.nvertex {
                self.augment_blossom(t2, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        let rot = idx(i);
        self.blossomchilds[b].rotate_left(rot);
        self.blossomendps[b].rotate_left(rot);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    fn augment_matching(&mut self, k: usize) {
        let (v0, w0, _) = self.edges[k];
        for (mut s, mut p) in [(v0, 2 * k + 1), (w0, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                debug_assert_eq!(self.label[bs], 1);
                debug_assert_eq!(self.labelend[bs], self.mate[self.blossombase[bs]]);
                if bs >= self.nvertex {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                debug_assert_eq!(self.label[bt], 2);
                debug_assert!(self.labelend[bt] != NONE);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                debug_assert_eq!(self.blossombase[bt], t);
                if bt >= self.nvertex {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn run(&mut self) {
        for _stage in 0..self.nvertex {
            self.label.iter_mut().for_each(|l| *l = 0);
            self.bestedge.iter_mut().for_each(|b| *b = NONE);
            for be in self.blossombestedges.iter_mut().skip(self.nvertex) {
                be.clear();
            }
            self.allowedge.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..self.nvertex {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }
            let mut augmented = false;
            let mut guard = 0usize;
            loop {
                guard += 1;
                assert!(
                    guard < 200 * (self.nvertex + self.edges.len()) + 10_000,
                    "blossom failed to converge"
                );
                while let Some(v) = self.queue.pop() {
                    debug_assert_eq!(self.label[self.inblossom[v]], 1);
                    for idx in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0.0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0.0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                debug_assert_eq!(self.label[self.inblossom[w]], 2);
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                    if augmented {
                        break;
                    }
                }
                if augmented {
                    break;
                }

                let mut deltatype = -1i32;
                let mut delta = 0.0f64;
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;

                if !self.max_cardinality {
                    deltatype = 1;
                    delta = self.dualvar[..self.nvertex]
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min)
                        .max(0.0);
                }
                for v in 0..self.nvertex {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if deltatype == -1 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * self.nvertex {
                    if self.blossomparent[b] == NONE
                        && self.label[b] == 1
                        && self.bestedge[b] != NONE
                    {
                        let d = self.slack(self.bestedge[b]) / 2.0;
                        if deltatype == -1 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == 2
                        && (deltatype == -1 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == -1 {
                    deltatype = 1;
                    delta = self.dualvar[..self.nvertex]
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min)
                        .max(0.0);
                }

                for v in 0..self.nvertex {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in self.nvertex..2 * self.nvertex {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }

                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (i, j, _) = self.edges[deltaedge];
                        let v = if self.label[self.inblossom[i]] == 0 { j } else { i };
                        debug_assert_eq!(self.label[self.inblossom[v]], 1);
                        self.queue.push(v);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        debug_assert_eq!(self.label[self.inblossom[i]], 1);
                        self.queue.push(i);
                    }
                    4 => self.expand_blossom(deltablossom, false),
                    _ => unreachable!(),
                }
            }

            if !augmented {
                break;
            }
            for b in self.nvertex..2 * self.nvertex {
                if self.blossombase[b] != NONE
                    && self.blossomparent[b] == NONE
                    && self.label[b] == 1
                    && self.dualvar[b] == 0.0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
    }
}

fn idx_endp(endps: &[usize], j: isize, endptrick: isize, len: isize) -> usize {
    let e = endps[j.rem_euclid(len) as usize];
    e ^ (endptrick as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mates(n: usize, edges: &[(usize, usize, f64)], maxcard: bool) -> Vec<Option<usize>> {
        max_weight_matching(n, edges, maxcard)
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(mates(0, &[], false), vec![]);
        let m = mates(2, &[(0, 1, 1.0)], false);
        assert_eq!(m, vec![Some(1), Some(0)]);
    }

    #[test]
    fn prefers_heavier_edge() {
        // Path 0-1-2: picking 1-2 (heavier) leaves 0 unmatched.
        let m = mates(3, &[(0, 1, 1.0), (1, 2, 2.0)], false);
        assert_eq!(m, vec![None, Some(2), Some(1)]);
    }

    #[test]
    fn max_cardinality_overrides_weight() {
        // 0-1 light, 1-2 heavy, 2-3 light: max cardinality must take both
        // light edges.
        let m = mates(4, &[(0, 1, 1.0), (1, 2, 10.0), (2, 3, 1.0)], true);
        assert_eq!(m, vec![Some(1), Some(0), Some(3), Some(2)]);
    }

    #[test]
    fn negative_weights_with_cardinality() {
        let m = mates(4, &[(0, 1, -2.0), (1, 2, -1.0), (2, 3, -2.0), (0, 3, -1.5)], true);
        // Perfect matchings: {01, 23} cost -4 vs {12, 03} cost -2.5: prefer
        // the larger total weight (= smaller cost) {12, 03}.
        assert_eq!(m, vec![Some(3), Some(2), Some(1), Some(0)]);
    }

    #[test]
    fn creates_and_uses_blossom() {
        // Classic blossom test (triangle plus pendant edges); two optimal
        // matchings exist with weight 24, so assert the total.
        let edges = [
            (0, 1, 8.0),
            (0, 2, 8.0),
            (1, 2, 10.0),
            (1, 3, 12.0),
            (2, 4, 12.0),
            (3, 4, 14.0),
        ];
        let m = mates(5, &edges, false);
        let mut total = 0.0;
        for (i, &mate) in m.iter().enumerate() {
            if let Some(j) = mate {
                assert_eq!(m[j], Some(i));
                if i < j {
                    total += edges.iter().find(|&&(a, b, _)| (a, b) == (i, j)).unwrap().2;
                }
            }
        }
        assert_eq!(total, 24.0);
    }

    #[test]
    fn blossom_expansion_cases() {
        // From the reference implementation's regression suite (t_expand).
        let edges = [
            (1, 2, 8.0),
            (1, 3, 8.0),
            (2, 3, 10.0),
            (2, 4, 12.0),
            (3, 5, 12.0),
            (4, 5, 14.0),
            (4, 6, 12.0),
            (5, 7, 12.0),
            (6, 7, 14.0),
            (7, 8, 12.0),
        ];
        let m = mates(9, &edges, false);
        assert_eq!(
            m,
            vec![None, Some(2), Some(1), Some(5), Some(6), Some(3), Some(4), Some(8), Some(7)]
        );
    }

    #[test]
    fn nested_blossom_expansion() {
        // t_nest: create nested S-blossom, use for augmentation.
        let edges = [
            (1, 2, 9.0),
            (1, 3, 9.0),
            (2, 3, 10.0),
            (2, 4, 8.0),
            (3, 5, 8.0),
            (4, 5, 10.0),
            (5, 6, 6.0),
        ];
        let m = mates(7, &edges, false);
        assert_eq!(m, vec![None, Some(3), Some(4), Some(1), Some(2), Some(6), Some(5)]);
    }

    #[test]
    fn relabeling_nested_blossom() {
        // t_nasty: create nested blossom, relabel as T.
        let edges = [
            (1, 2, 45.0),
            (1, 5, 45.0),
            (2, 3, 50.0),
            (3, 4, 45.0),
            (4, 5, 50.0),
            (1, 6, 30.0),
            (3, 9, 35.0),
            (4, 8, 35.0),
            (5, 7, 26.0),
            (9, 10, 5.0),
        ];
        let m = mates(11, &edges, false);
        assert_eq!(
            m,
            vec![
                None,
                Some(6),
                Some(3),
                Some(2),
                Some(8),
                Some(7),
                Some(1),
                Some(5),
                Some(4),
                Some(10),
                Some(9)
            ]
        );
    }

    #[test]
    fn random_perfect_matchings_are_minimal() {
        // Compare against exhaustive minimum-weight perfect matching on
        // complete graphs of 6 vertices with pseudo-random weights.
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _trial in 0..200 {
            let n = 6;
            let mut edges = Vec::new();
            let mut w = vec![vec![0.0f64; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let weight = 0.1 + next();
                    w[i][j] = weight;
                    w[j][i] = weight;
                    edges.push((i, j, -weight));
                }
            }
            let mate = mates(n, &edges, true);
            let mut got = 0.0;
            for i in 0..n {
                let j = mate[i].expect("perfect matching");
                if i < j {
                    got += w[i][j];
                }
            }
            // Exhaustive minimum over the 15 perfect matchings of K6.
            let mut best = f64::INFINITY;
            let verts = [0, 1, 2, 3, 4, 5];
            for a in 1..6 {
                let rest: Vec<usize> = verts.iter().copied().filter(|&v| v != 0 && v != a).collect();
                for b_idx in 1..4 {
                    let b = rest[b_idx];
                    let others: Vec<usize> =
                        rest.iter().copied().filter(|&v| v != rest[0] && v != b).collect();
                    let total =
                        w[0][a] + w[rest[0]][b] + w[others[0]][others[1]];
                    best = best.min(total);
                }
            }
            assert!(
                got <= best + 1e-9,
                "matching weight {got} exceeds exhaustive minimum {best}"
            );
        }
    }
}
