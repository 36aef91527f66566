//! Interned variables, labels and the fresh-name supply.

use std::fmt;
use std::rc::Rc;

macro_rules! var_kind {
    ($(#[$doc:meta])* $name:ident, $prefix:literal) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

var_kind!(
    /// Type variable.
    TyVar, "a");
var_kind!(
    /// Behaviour variable.
    BehVar, "b");
var_kind!(
    /// Region variable.
    RegVar, "r");
var_kind!(
    /// Plain session variable.
    SesVar, "s");
var_kind!(
    /// Choice variable; printed as `si`/`se` by the session printer.
    ChoiceVar, "k");
var_kind!(
    /// Static endpoint label attached to request/accept/resume sites.
    Label, "l");

/// Capitalised choice label. Ordered by name, which is the global enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChoiceLabel(pub Rc<str>);

impl ChoiceLabel {
    pub fn new(s: &str) -> Self {
        ChoiceLabel(Rc::from(s))
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ChoiceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Global channel name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Channel(pub Rc<str>);

impl Channel {
    pub fn new(s: &str) -> Self {
        Channel(Rc::from(s))
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One side of a global channel: `c` (request side) or `~c` (accept side).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelEnd {
    pub chan: Channel,
    pub accept: bool,
}

impl ChannelEnd {
    pub fn request(chan: Channel) -> Self {
        ChannelEnd { chan, accept: false }
    }
    pub fn accept(chan: Channel) -> Self {
        ChannelEnd { chan, accept: true }
    }
}

impl fmt::Display for ChannelEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.accept {
            write!(f, "~{}", self.chan)
        } else {
            write!(f, "{}", self.chan)
        }
    }
}

/// Monotone counter shared by every variable kind within one analysis run.
#[derive(Clone, Debug)]
pub struct Supply {
    next: u32,
}

impl Default for Supply {
    fn default() -> Self {
        Supply { next: 1 }
    }
}

impl Supply {
    pub fn new() -> Self {
        Self::default()
    }
    /// Start above every id already in use.
    pub fn starting_at(next: u32) -> Self {
        Supply { next: next.max(1) }
    }
    pub fn peek(&self) -> u32 {
        self.next
    }
    fn bump(&mut self) -> u32 {
        let n = self.next;
        self.next += 1;
        n
    }
    pub fn ty(&mut self) -> TyVar {
        TyVar(self.bump())
    }
    pub fn beh(&mut self) -> BehVar {
        BehVar(self.bump())
    }
    pub fn reg(&mut self) -> RegVar {
        RegVar(self.bump())
    }
    pub fn ses(&mut self) -> SesVar {
        SesVar(self.bump())
    }
    pub fn choice(&mut self) -> ChoiceVar {
        ChoiceVar(self.bump())
    }
}
