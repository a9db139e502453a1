use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_MODES: usize = 8;

/// Occupation multi-index, padded with zeros past `d`.
pub type Occ = [u32; MAX_MODES];

/// Multi-indices n with |n| ≤ N over d modes, graded-lexicographic order:
/// by total quanta, then descending lexicographic within a shell.
#[derive(Debug)]
pub struct ModeBasis {
    d: usize,
    n_max: usize,
    states: Vec<Occ>,
    index: HashMap<Occ, usize>,
    shell_start: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub d: usize,
    pub n_max: usize,
    pub ordering: String,
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r as usize
}

fn fill_shell(d: usize, pos: usize, left: u32, cur: &mut Occ, out: &mut Vec<Occ>) {
    if pos == d - 1 {
        cur[pos] = left;
        out.push(*cur);
        cur[pos] = 0;
        return;
    }
    for v in (0..=left).rev() {
        cur[pos] = v;
        fill_shell(d, pos + 1, left - v, cur, out);
    }
    cur[pos] = 0;
}

impl ModeBasis {
    pub fn new(d: usize, n_max: usize) -> Result<Arc<Self>> {
        if d == 0 || d > MAX_MODES {
            return Err(Error::Invalid(format!("mode count {d} outside 1..={MAX_MODES}")));
        }
        let mut states = Vec::with_capacity(binomial(n_max + d, d));
        let mut shell_start = Vec::with_capacity(n_max + 2);
        let mut cur = [0u32; MAX_MODES];
        for n in 0..=n_max {
            shell_start.push(states.len());
            fill_shell(d, 0, n as u32, &mut cur, &mut states);
        }
        shell_start.push(states.len());
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(Arc::new(ModeBasis { d, n_max, states, index, shell_start }))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &Occ {
        &self.states[i]
    }

    pub fn states(&self) -> &[Occ] {
        &self.states
    }

    pub fn index_of(&self, occ: &Occ) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.states[i].iter().map(|&v| v as usize).sum()
    }

    /// Index range of the shell with `n` total quanta.
    pub fn shell(&self, n: usize) -> std::ops::Range<usize> {
        self.shell_start[n]..self.shell_start[n + 1]
    }

    pub fn occ_from_slice(&self, occ: &[u32]) -> Result<Occ> {
        if occ.len() != self.d {
            return Err(Error::Dimension { expected: self.d, got: occ.len() });
        }
        let mut o = [0u32; MAX_MODES];
        o[..self.d].copy_from_slice(occ);
        Ok(o)
    }

    pub fn descriptor(&self) -> BasisDescriptor {
        BasisDescriptor { d: self.d, n_max: self.n_max, ordering: "graded-lex-desc".into() }
    }

    pub fn same_as(&self, other: &ModeBasis) -> bool {
        self.d == other.d && self.n_max == other.n_max
    }
}
