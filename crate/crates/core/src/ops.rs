//! Value semantics shared by every interpreter in the crate.
//!
//! All values are 32-bit two's-complement integers. Arithmetic wraps,
//! division and remainder by zero yield 0, and shift amounts are taken
//! modulo 32. Relational and logical operators produce 0 or 1.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    LAnd,
    LOr,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl BinOp {
    pub const ALL: [BinOp; 18] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
        BinOp::Shl,
        BinOp::Shr,
        BinOp::BitAnd,
        BinOp::BitOr,
        BinOp::BitXor,
        BinOp::LAnd,
        BinOp::LOr,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Gt,
        BinOp::Le,
        BinOp::Ge,
    ];

    pub fn apply(self, a: i32, b: i32) -> i32 {
        match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Div => {
                if b == 0 {
                    0
                } else {
                    a.wrapping_div(b)
                }
            }
            BinOp::Mod => {
                if b == 0 {
                    0
                } else {
                    a.wrapping_rem(b)
                }
            }
            BinOp::Shl => a.wrapping_shl(b as u32),
            BinOp::Shr => a.wrapping_shr(b as u32),
            BinOp::BitAnd => a & b,
            BinOp::BitOr => a | b,
            BinOp::BitXor => a ^ b,
            BinOp::LAnd => ((a != 0) && (b != 0)) as i32,
            BinOp::LOr => ((a != 0) || (b != 0)) as i32,
            BinOp::Eq => (a == b) as i32,
            BinOp::Ne => (a != b) as i32,
            BinOp::Lt => (a < b) as i32,
            BinOp::Gt => (a > b) as i32,
            BinOp::Le => (a <= b) as i32,
            BinOp::Ge => (a >= b) as i32,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::LAnd => "&&",
            BinOp::LOr => "||",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
        }
    }

    /// C binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::LOr => 1,
            BinOp::LAnd => 2,
            BinOp::BitOr => 3,
            BinOp::BitXor => 4,
            BinOp::BitAnd => 5,
            BinOp::Eq | BinOp::Ne => 6,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 7,
            BinOp::Shl | BinOp::Shr => 8,
            BinOp::Add | BinOp::Sub => 9,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 10,
        }
    }

    pub fn is_relational(self) -> bool {
        RelOp::from_binop(self).is_some()
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Relational operators available to atom predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

impl RelOp {
    pub const ALL: [RelOp; 6] = [RelOp::Eq, RelOp::Ne, RelOp::Lt, RelOp::Gt, RelOp::Le, RelOp::Ge];

    pub fn holds(self, a: i32, b: i32) -> bool {
        match self {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Lt => a < b,
            RelOp::Gt => a > b,
            RelOp::Le => a <= b,
            RelOp::Ge => a >= b,
        }
    }

    pub fn as_binop(self) -> BinOp {
        match self {
            RelOp::Eq => BinOp::Eq,
            RelOp::Ne => BinOp::Ne,
            RelOp::Lt => BinOp::Lt,
            RelOp::Gt => BinOp::Gt,
            RelOp::Le => BinOp::Le,
            RelOp::Ge => BinOp::Ge,
        }
    }

    pub fn from_binop(op: BinOp) -> Option<RelOp> {
        Some(match op {
            BinOp::Eq => RelOp::Eq,
            BinOp::Ne => RelOp::Ne,
            BinOp::Lt => RelOp::Lt,
            BinOp::Gt => RelOp::Gt,
            BinOp::Le => RelOp::Le,
            BinOp::Ge => RelOp::Ge,
            _ => return None,
        })
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_binop().symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
}

impl UnOp {
    pub fn apply(self, a: i32) -> i32 {
        match self {
            UnOp::Neg => a.wrapping_neg(),
            UnOp::Not => (a == 0) as i32,
            UnOp::BitNot => !a,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
            UnOp::BitNot => "~",
        }
    }
}

/// Built-in functions with a canned run-time implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intrinsic {
    Hash2,
    Hash3,
    Sqrt,
}

impl Intrinsic {
    pub fn from_name(name: &str) -> Option<Intrinsic> {
        match name {
            "hash2" => Some(Intrinsic::Hash2),
            "hash3" => Some(Intrinsic::Hash3),
            "sqrt" => Some(Intrinsic::Sqrt),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Intrinsic::Hash2 => "hash2",
            Intrinsic::Hash3 => "hash3",
            Intrinsic::Sqrt => "sqrt",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Intrinsic::Hash2 => 2,
            Intrinsic::Hash3 => 3,
            Intrinsic::Sqrt => 1,
        }
    }

    /// Whether the switch provides a hardware unit for this intrinsic.
    pub fn has_hardware_unit(self) -> bool {
        matches!(self, Intrinsic::Hash2 | Intrinsic::Hash3)
    }

    pub fn eval(self, seed: u64, args: &[i32]) -> i32 {
        match self {
            Intrinsic::Hash2 | Intrinsic::Hash3 => hash_mix(seed, self.arity() as u64, args),
            Intrinsic::Sqrt => isqrt(args[0]),
        }
    }
}

impl fmt::Display for Intrinsic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Seed shared by every evaluator of `hash2`/`hash3`.
pub const HASH_SEED: u64 = 0;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn fmix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    h
}

/// Multiply-xor-shift mix of the arguments, masked to a non-negative `i32`.
///
/// `h0 = fmix64(seed ^ arity * GOLDEN)`, then for each argument
/// `h = fmix64(h ^ (arg as u32)).wrapping_add(GOLDEN)`; the result is the
/// low 31 bits of the final `h`.
pub fn hash_mix(seed: u64, arity: u64, args: &[i32]) -> i32 {
    let mut h = fmix64(seed ^ arity.wrapping_mul(GOLDEN));
    for &a in args {
        h = fmix64(h ^ u64::from(a as u32)).wrapping_add(GOLDEN);
    }
    (h & 0x7fff_ffff) as i32
}

/// Integer square root, 0 for negative inputs.
pub fn isqrt(v: i32) -> i32 {
    if v <= 0 {
        return 0;
    }
    let v = v as u32;
    let mut r = (v as f64).sqrt() as u32;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r as i32
}

/// Reduce an array index into `0..size`.
pub fn wrap_index(index: i32, size: u32) -> usize {
    (i64::from(index).rem_euclid(i64::from(size))) as usize
}
