//! The buffering line `X_1 .. X_{2DL}` that synchronises a reset.

/// Position on the line, `1..=2DL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferState {
    pub index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Line {
    /// `D * L`: the last red index.
    pub red_len: u32,
}

impl Line {
    pub fn new(d: u32, l: u32) -> Self {
        Line { red_len: d * l }
    }

    pub fn len(&self) -> u32 {
        2 * self.red_len
    }

    pub fn is_red(&self, b: BufferState) -> bool {
        b.index <= self.red_len
    }

    /// Two line agents. `None` means both depart to the election.
    pub fn progress(&self, a: BufferState, b: BufferState) -> Option<BufferState> {
        let top = self.len();
        if a.index >= top && b.index >= top {
            return None;
        }
        let next = (a.index.min(b.index) + 1).min(top);
        Some(BufferState { index: next })
    }
}
