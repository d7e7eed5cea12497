//! Canonical forms and orientation-preserving isomorphisms of tracks.

use std::collections::VecDeque;

use super::{HalfBranch, TrainTrack};

/// A combinatorial isomorphism `source → target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isomorphism {
    pub switch_map: Vec<usize>,
    pub branch_map: Vec<usize>,
    /// Whether branch `i` has its ends swapped.
    pub reversed: Vec<bool>,
}

struct Labelling {
    code: Vec<usize>,
    switch_label: Vec<usize>,
    branch_label: Vec<usize>,
    /// The end of each branch that received canonical end 0.
    first_end: Vec<u8>,
}

/// Encodes the track from a starting switch and orientation; switches found
/// later are oriented so that the half-branch they were found through sits on
/// canonical side 0.
fn label_from(t: &TrainTrack, start: usize, flip: bool) -> Option<Labelling> {
    const NONE: usize = usize::MAX;
    let ns = t.switches.len();
    let mut switch_label = vec![NONE; ns];
    let mut switch_flip = vec![false; ns];
    let mut branch_label = vec![NONE; t.branch_count];
    let mut first_end = vec![0u8; t.branch_count];
    let (mut next_switch, mut next_branch) = (0, 0);
    let mut queue = VecDeque::new();
    switch_label[start] = 0;
    switch_flip[start] = flip;
    next_switch += 1;
    queue.push_back(start);
    let canonical_sides = |s: usize, f: bool| -> [Vec<HalfBranch>; 2] {
        let sides = &t.switches[s].sides;
        if f {
            [sides[1].iter().rev().copied().collect(), sides[0].iter().rev().copied().collect()]
        } else {
            [sides[0].clone(), sides[1].clone()]
        }
    };
    while let Some(s) = queue.pop_front() {
        let sides = canonical_sides(s, switch_flip[s]);
        for side in &sides {
            for &HalfBranch(b, e) in side {
                if branch_label[b] == NONE {
                    branch_label[b] = next_branch;
                    first_end[b] = e;
                    next_branch += 1;
                    let other = t.slot(HalfBranch(b, 1 - e));
                    if switch_label[other.switch] == NONE {
                        switch_label[other.switch] = next_switch;
                        switch_flip[other.switch] = other.side == 1;
                        next_switch += 1;
                        queue.push_back(other.switch);
                    }
                }
            }
        }
    }
    if switch_label.contains(&NONE) {
        return None;
    }
    // Emit switches in label order so the code is independent of queue order.
    let mut by_label = vec![0; ns];
    for (s, &l) in switch_label.iter().enumerate() {
        by_label[l] = s;
    }
    let mut code = vec![ns, t.branch_count];
    for &s in &by_label {
        for side in &canonical_sides(s, switch_flip[s]) {
            code.push(side.len());
            for &HalfBranch(b, e) in side {
                code.push(branch_label[b]);
                code.push((e != first_end[b]) as usize);
            }
        }
    }
    Some(Labelling { code, switch_label, branch_label, first_end })
}

/// Lexicographically minimal encoding over all starts; `None` for
/// disconnected tracks.
pub fn canonical_form(t: &TrainTrack) -> Option<Vec<usize>> {
    (0..t.switches.len())
        .flat_map(|s| [false, true].map(|f| (s, f)))
        .filter_map(|(s, f)| label_from(t, s, f).map(|l| l.code))
        .min()
}

pub fn isomorphisms(source: &TrainTrack, target: &TrainTrack) -> Vec<Isomorphism> {
    if source.switches.len() != target.switches.len()
        || source.branch_count != target.branch_count
        || source.switches.is_empty()
    {
        return Vec::new();
    }
    let Some(tl) = label_from(target, 0, false) else { return Vec::new() };
    let mut out = Vec::new();
    for s in 0..source.switches.len() {
        for f in [false, true] {
            let Some(sl) = label_from(source, s, f) else { continue };
            if sl.code != tl.code {
                continue;
            }
            let inv = |labels: &[usize]| {
                let mut v = vec![0; labels.len()];
                for (x, &l) in labels.iter().enumerate() {
                    v[l] = x;
                }
                v
            };
            let t_switch = inv(&tl.switch_label);
            let t_branch = inv(&tl.branch_label);
            let branch_map: Vec<usize> = sl.branch_label.iter().map(|&l| t_branch[l]).collect();
            let reversed = (0..source.branch_count)
                .map(|b| sl.first_end[b] != tl.first_end[branch_map[b]])
                .collect();
            out.push(Isomorphism {
                switch_map: sl.switch_label.iter().map(|&l| t_switch[l]).collect(),
                branch_map,
                reversed,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traintrack::torus::standard_track;

    #[test]
    fn standard_track_has_identity_automorphism() {
        let t = standard_track();
        let autos = isomorphisms(&t, &t);
        assert!(autos.iter().any(|a| a.branch_map == vec![0, 1, 2] && a.reversed.iter().all(|r| !r)));
        assert!(canonical_form(&t).is_some());
    }
}
