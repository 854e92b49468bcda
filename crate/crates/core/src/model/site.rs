use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::fmt;

/// Structural key of a vertex: coordinates, tree addresses or tagged tuples.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(pub SmallVec<[i64; 4]>);

impl Site {
    pub fn new(coords: &[i64]) -> Self {
        Site(SmallVec::from_slice(coords))
    }

    pub fn scalar(c: i64) -> Self {
        Site::new(&[c])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i64 {
        self.0[i]
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<const N: usize> From<[i64; N]> for Site {
    fn from(c: [i64; N]) -> Self {
        Site::new(&c)
    }
}
