//! Infinite index families `i ↦ T_i` (i ≥ 1) given by a finite prefix and a
//! rule for the tail.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use crate::error::{bail, Result};

type Generator<T> = Arc<dyn Fn(usize) -> T + Send + Sync>;

/// How a schedule continues after its prefix.
#[derive(Clone)]
pub enum Tail<T> {
    /// Cycle through the list forever.
    Repeat(Vec<T>),
    /// Compute element `i` (absolute, 1-based index) on demand.
    Generated(Generator<T>),
}

impl<T: fmt::Debug> fmt::Debug for Tail<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tail::Repeat(v) => f.debug_tuple("Repeat").field(v).finish(),
            Tail::Generated(_) => f.write_str("Generated(..)"),
        }
    }
}

/// An indexed family `i ↦ T_i`, 1-based.
#[derive(Clone, Debug)]
pub struct Schedule<T> {
    prefix: Vec<T>,
    tail: Tail<T>,
}

impl<T: Clone> Schedule<T> {
    pub fn new(prefix: Vec<T>, tail: Tail<T>) -> Result<Self> {
        if let Tail::Repeat(r) = &tail {
            if r.is_empty() {
                bail!(InvalidInput, "repeat tail must be nonempty");
            }
        }
        Ok(Self { prefix, tail })
    }

    /// `T_i = item` for every i.
    pub fn constant(item: T) -> Self {
        Self {
            prefix: Vec::new(),
            tail: Tail::Repeat(vec![item]),
        }
    }

    /// `T_i = items[(i - 1) mod p]`. Panics on an empty list.
    pub fn periodic(items: Vec<T>) -> Self {
        assert!(
            !items.is_empty(),
            "periodic schedule needs at least one item"
        );
        Self {
            prefix: Vec::new(),
            tail: Tail::Repeat(items),
        }
    }

    pub fn generated(f: impl Fn(usize) -> T + Send + Sync + 'static) -> Self {
        Self {
            prefix: Vec::new(),
            tail: Tail::Generated(Arc::new(f)),
        }
    }

    pub fn prefix(&self) -> &[T] {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail<T> {
        &self.tail
    }

    /// Element `i`, 1-based. Panics on `i == 0`.
    pub fn get(&self, i: usize) -> Cow<'_, T> {
        assert!(i >= 1, "schedules are 1-based");
        if i <= self.prefix.len() {
            return Cow::Borrowed(&self.prefix[i - 1]);
        }
        match &self.tail {
            Tail::Repeat(r) => Cow::Borrowed(&r[(i - self.prefix.len() - 1) % r.len()]),
            Tail::Generated(f) => Cow::Owned(f(i)),
        }
    }

    /// The first `k` elements `T_1..T_k`.
    pub fn take(&self, k: usize) -> Vec<T> {
        (1..=k).map(|i| self.get(i).into_owned()).collect()
    }

    /// Every stored element (prefix and repeat list); empty for generated tails.
    pub fn stored(&self) -> impl Iterator<Item = &T> {
        let rep: &[T] = match &self.tail {
            Tail::Repeat(r) => r,
            Tail::Generated(_) => &[],
        };
        self.prefix.iter().chain(rep)
    }

    /// Applies `f` elementwise, keeping the prefix/tail structure.
    pub fn map<U: Clone + 'static>(
        &self,
        f: impl Fn(&T) -> U + Send + Sync + 'static,
    ) -> Schedule<U>
    where
        T: Send + Sync + 'static,
    {
        let prefix = self.prefix.iter().map(&f).collect();
        let tail = match &self.tail {
            Tail::Repeat(r) => Tail::Repeat(r.iter().map(&f).collect()),
            Tail::Generated(g) => {
                let g = Arc::clone(g);
                Tail::Generated(Arc::new(move |i| f(&g(i))))
            }
        };
        Schedule { prefix, tail }
    }
}
