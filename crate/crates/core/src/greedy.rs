//! One-sided greedy matching and its accessible-word chain.
//!
//! Letters are read left to right. An arriving letter `x` is paired with the
//! most recent accessible occurrence of `x^-1`; every accessible letter after
//! that occurrence is discarded for good (pairing it later would cross the
//! new pair). With no accessible `x^-1`, `x` becomes accessible itself.

use serde::Serialize;

use crate::matching::Matching;
use crate::word::{Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GreedyTrace {
    pub matched_pairs: Matching,
    pub reductions: usize,
    pub final_state: Word,
    pub unmatched: usize,
}

/// Streaming form of the greedy algorithm.
///
/// Keeps the accessible word plus, for every letter code, the stack of
/// accessible positions holding it, so each step is amortized `O(1)`.
#[derive(Debug, Clone)]
pub struct GreedyMatcher {
    k: u32,
    /// accessible letters with their 1-based position in the input
    accessible: Vec<(Letter, usize)>,
    /// indices into `accessible`, per letter code
    slots: Vec<Vec<usize>>,
    consumed: usize,
    reductions: usize,
    pairs: Vec<(usize, usize)>,
    record_pairs: bool,
}

impl GreedyMatcher {
    pub fn new(k: u32) -> Self {
        GreedyMatcher {
            k,
            accessible: Vec::new(),
            slots: vec![Vec::new(); 2 * k as usize],
            consumed: 0,
            reductions: 0,
            pairs: Vec::new(),
            record_pairs: true,
        }
    }

    /// Skips storing pairs; for long simulations that only need counts.
    pub fn counting_only(k: u32) -> Self {
        GreedyMatcher { record_pairs: false, ..Self::new(k) }
    }

    /// Feeds one letter; returns whether it was matched.
    pub fn push(&mut self, x: Letter) -> bool {
        self.consumed += 1;
        let position = self.consumed;
        match self.slots[x.inverse().code()].last().copied() {
            Some(slot) => {
                if self.record_pairs {
                    self.pairs.push((self.accessible[slot].1, position));
                }
                for (letter, _) in self.accessible.drain(slot..) {
                    self.slots[letter.code()].pop();
                }
                self.reductions += 1;
                true
            }
            None => {
                self.slots[x.code()].push(self.accessible.len());
                self.accessible.push((x, position));
                false
            }
        }
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn reductions(&self) -> usize {
        self.reductions
    }

    pub fn accessible_len(&self) -> usize {
        self.accessible.len()
    }

    pub fn unmatched(&self) -> usize {
        self.consumed - 2 * self.reductions
    }

    pub fn state(&self) -> Word {
        let mut w = Word::empty(self.k);
        for &(letter, _) in &self.accessible {
            w.push(letter);
        }
        w
    }

    pub fn finish(self) -> GreedyTrace {
        let final_state = self.state();
        let unmatched = self.unmatched();
        GreedyTrace {
            matched_pairs: Matching::new(self.consumed, self.pairs),
            reductions: self.reductions,
            final_state,
            unmatched,
        }
    }
}

/// Runs the greedy algorithm over a whole word.
pub fn greedy_match(w: &Word) -> GreedyTrace {
    let mut matcher = GreedyMatcher::new(w.k());
    for &x in w.letters() {
        matcher.push(x);
    }
    matcher.finish()
}

/// One transition of the accessible-word chain.
pub fn chain_step(state: &Word, letter: Letter) -> (Word, bool) {
    let letters = state.letters();
    match letters.iter().rposition(|&l| l == letter.inverse()) {
        Some(j) => {
            let next = Word::new(state.k(), letters[..j].to_vec()).expect("prefix of a valid word");
            (next, true)
        }
        None => {
            let mut next = state.clone();
            next.push(letter);
            (next, false)
        }
    }
}

/// True iff no symbol occurs together with its inverse.
pub fn in_recurrent_class(w: &Word) -> bool {
    let mut seen = vec![false; 2 * w.k() as usize];
    for c in w.codes() {
        seen[c] = true;
    }
    seen.chunks(2).all(|pair| !(pair[0] && pair[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::validate_matching;
    use crate::word::parse_word;

    fn w(text: &str) -> Word {
        parse_word(text, 2).unwrap()
    }

    #[test]
    fn worked_example() {
        let trace = greedy_match(&w("ababAaBb"));
        assert_eq!(trace.matched_pairs.pairs(), &[(2, 7), (3, 5)]);
        assert_eq!(trace.unmatched, 4);
        assert_eq!(trace.reductions, 2);
        assert_eq!(trace.final_state, w("ab"));
    }

    #[test]
    fn empty_and_immediate() {
        let trace = greedy_match(&Word::empty(2));
        assert!(trace.matched_pairs.is_empty());
        assert_eq!(trace.unmatched, 0);

        let trace = greedy_match(&w("aA"));
        assert_eq!(trace.matched_pairs.pairs(), &[(1, 2)]);
        assert_eq!(trace.unmatched, 0);
    }

    #[test]
    fn step_examples() {
        let a = Letter::new(1, false);
        let b = Letter::new(2, false);
        assert_eq!(chain_step(&w("aba"), a.inverse()), (w("ab"), true));
        assert_eq!(chain_step(&Word::empty(2), b), (w("b"), false));
        assert_eq!(chain_step(&w("ab"), b.inverse()), (w("a"), true));
    }

    #[test]
    fn matcher_agrees_with_step_function() {
        let word = w("abbaBAbaaBABbbAAaBab");
        let mut state = Word::empty(2);
        let mut matcher = GreedyMatcher::new(2);
        for &x in word.letters() {
            let (next, reduced) = chain_step(&state, x);
            assert_eq!(matcher.push(x), reduced);
            assert_eq!(matcher.state(), next);
            assert!(in_recurrent_class(&next));
            state = next;
        }
        let trace = matcher.finish();
        assert!(validate_matching(&word, &trace.matched_pairs).unwrap());
    }

    #[test]
    fn recurrent_class_membership() {
        assert!(in_recurrent_class(&w("aab")));
        assert!(!in_recurrent_class(&w("abA")));
        assert!(in_recurrent_class(&Word::empty(3)));
    }
}
