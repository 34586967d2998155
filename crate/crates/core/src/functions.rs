//! Registry of the reactive functions callable from constraint expressions.
//!
//! Every function is pure. Numeric semantics follow IEEE doubles and are
//! specified operation by operation so that any runtime can reproduce them
//! bit for bit (in particular `Math.min`/`Math.max` propagate NaN, and
//! `Math.round` rounds halves toward positive infinity).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::value::{Value, ValueType};

pub type FunctionImpl = Arc<dyn Fn(&[Value]) -> Value + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Number,
    Text,
    Any,
}

impl ParamType {
    fn accepts(self, ty: ValueType) -> bool {
        match self {
            ParamType::Any => true,
            ParamType::Number => ty == ValueType::Number,
            ParamType::Text => ty == ValueType::Text,
        }
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamType::Number => "Number",
            ParamType::Text => "Text",
            ParamType::Any => "Number or Text",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSignature {
    pub qualified_name: String,
    pub params: Vec<ParamType>,
    /// Trailing parameters beyond this count are optional.
    pub min_args: usize,
    /// The last entry of `params` repeats indefinitely.
    pub variadic: bool,
    pub return_type: ValueType,
}

impl FunctionSignature {
    pub fn fixed(name: &str, params: &[ParamType], ret: ValueType) -> Self {
        FunctionSignature {
            qualified_name: name.to_string(),
            params: params.to_vec(),
            min_args: params.len(),
            variadic: false,
            return_type: ret,
        }
    }

    pub fn check_call(&self, args: &[ValueType]) -> Result<(), CallError> {
        let max = if self.variadic { usize::MAX } else { self.params.len() };
        if args.len() < self.min_args || args.len() > max {
            return Err(CallError::Arity {
                expected: self.arity_text(),
                found: args.len(),
            });
        }
        for (i, ty) in args.iter().enumerate() {
            let param = self.params.get(i).or(self.params.last()).copied();
            if let Some(param) = param {
                if !param.accepts(*ty) {
                    return Err(CallError::Type {
                        index: i,
                        expected: param,
                        found: *ty,
                    });
                }
            }
        }
        Ok(())
    }

    fn arity_text(&self) -> String {
        if self.variadic {
            format!("at least {}", self.min_args)
        } else if self.min_args == self.params.len() {
            self.params.len().to_string()
        } else {
            format!("{} to {}", self.min_args, self.params.len())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CallError {
    #[error("expected {expected} argument(s), found {found}")]
    Arity { expected: String, found: usize },
    #[error("argument {} must be {expected}, found {found}", .index + 1)]
    Type {
        index: usize,
        expected: ParamType,
        found: ValueType,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionError {
    #[error("function '{0}' is already registered")]
    DuplicateFunction(String),
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
    #[error("{name}: {source}")]
    BadCall { name: String, source: CallError },
}

pub struct FunctionEntry {
    pub signature: FunctionSignature,
    pub implementation: FunctionImpl,
}

impl fmt::Debug for FunctionEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionEntry")
            .field("signature", &self.signature)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Default)]
pub struct FunctionRegistry {
    entries: BTreeMap<String, Arc<FunctionEntry>>,
}

impl FunctionRegistry {
    /// An empty registry, without even the built-ins.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        for (sig, imp) in builtins() {
            reg.register(sig, imp).expect("built-in names are unique");
        }
        reg
    }

    pub fn register(
        &mut self,
        signature: FunctionSignature,
        implementation: FunctionImpl,
    ) -> Result<(), FunctionError> {
        let name = signature.qualified_name.clone();
        if self.entries.contains_key(&name) {
            return Err(FunctionError::DuplicateFunction(name));
        }
        self.entries.insert(
            name,
            Arc::new(FunctionEntry {
                signature,
                implementation,
            }),
        );
        Ok(())
    }

    pub fn get(&self, qualified_name: &str) -> Option<&Arc<FunctionEntry>> {
        self.entries.get(qualified_name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Checked invocation, for hosts calling functions directly. Compiled
    /// modules call implementations without re-checking.
    pub fn invoke(&self, qualified_name: &str, args: &[Value]) -> Result<Value, FunctionError> {
        let entry = self
            .get(qualified_name)
            .ok_or_else(|| FunctionError::UnknownFunction(qualified_name.to_string()))?;
        let types: Vec<_> = args.iter().map(Value::value_type).collect();
        entry
            .signature
            .check_call(&types)
            .map_err(|source| FunctionError::BadCall {
                name: qualified_name.to_string(),
                source,
            })?;
        Ok((entry.implementation)(args))
    }
}

fn num(args: &[Value], i: usize) -> f64 {
    args.get(i).and_then(Value::as_number).unwrap_or(f64::NAN)
}

fn unary(f: fn(f64) -> f64) -> FunctionImpl {
    Arc::new(move |args| Value::Number(f(num(args, 0))))
}

fn binary(f: fn(f64, f64) -> f64) -> FunctionImpl {
    Arc::new(move |args| Value::Number(f(num(args, 0), num(args, 1))))
}

fn builtins() -> Vec<(FunctionSignature, FunctionImpl)> {
    use ParamType::{Any, Number as N};
    let n = ValueType::Number;
    vec![
        (FunctionSignature::fixed("Math.min", &[N, N], n), binary(min)),
        (FunctionSignature::fixed("Math.max", &[N, N], n), binary(max)),
        (FunctionSignature::fixed("Math.abs", &[N], n), unary(f64::abs)),
        (FunctionSignature::fixed("Math.floor", &[N], n), unary(f64::floor)),
        (FunctionSignature::fixed("Math.round", &[N], n), unary(round)),
        (FunctionSignature::fixed("Math.sqrt", &[N], n), unary(f64::sqrt)),
        (FunctionSignature::fixed("Math.sin", &[N], n), unary(sin_deg)),
        (FunctionSignature::fixed("Math.cos", &[N], n), unary(cos_deg)),
        (FunctionSignature::fixed("Math.mod", &[N, N], n), binary(|a, b| a % b)),
        (
            FunctionSignature {
                qualified_name: "Str.concat".into(),
                params: vec![Any],
                min_args: 0,
                variadic: true,
                return_type: ValueType::Text,
            },
            Arc::new(|args: &[Value]| {
                let mut out = String::new();
                for a in args {
                    match a {
                        Value::Text(t) => out.push_str(t),
                        Value::Number(x) => out.push_str(&format_short(*x)),
                    }
                }
                Value::Text(out)
            }),
        ),
        (
            FunctionSignature {
                qualified_name: "Str.num".into(),
                params: vec![N, N],
                min_args: 1,
                variadic: false,
                return_type: ValueType::Text,
            },
            Arc::new(|args: &[Value]| {
                let x = num(args, 0);
                Value::Text(match args.get(1).and_then(Value::as_number) {
                    Some(d) => format_fixed(x, decimals_arg(d)),
                    None => format_short(x),
                })
            }),
        ),
    ]
}

/// NaN-propagating minimum; `min(0, -0)` is `-0`.
pub fn min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a < b {
        a
    } else if b < a {
        b
    } else if a.is_sign_negative() {
        a
    } else {
        b
    }
}

/// NaN-propagating maximum; `max(0, -0)` is `0`.
pub fn max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else if a > b {
        a
    } else if b > a {
        b
    } else if a.is_sign_positive() {
        a
    } else {
        b
    }
}

/// Rounds to the nearest integer, halves toward +∞.
pub fn round(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let f = x.floor();
    let r = if x - f >= 0.5 { f + 1.0 } else { f };
    if r == 0.0 && x.is_sign_negative() {
        -0.0
    } else {
        r
    }
}

// Truncated toward zero and clamped to 0..=20.
fn decimals_arg(d: f64) -> usize {
    if d.is_nan() {
        0
    } else {
        d.trunc().clamp(0.0, 20.0) as usize
    }
}

/// Fixed-point decimal text of `x` with `decimals` fraction digits, rounding
/// the exact binary value half away from zero. Non-finite values print as
/// `NaN`, `Infinity`, `-Infinity`.
pub fn format_fixed(x: f64, decimals: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "Infinity" } else { "-Infinity" }.into();
    }
    let decimals = decimals.min(20);
    let sign = if x < 0.0 { "-" } else { "" };
    let a = x.abs();
    if a >= 1e21 {
        // Beyond fixed-point range: integer digits only.
        return format!("{sign}{a:.0}");
    }

    let bits = a.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    if exp >= 0 {
        // An integer below 2^70: the fraction digits are all zero.
        let int = (mantissa as u128) << exp;
        return match decimals {
            0 => format!("{sign}{int}"),
            d => format!("{sign}{int}.{}", "0".repeat(d)),
        };
    }
    // a = mantissa * 2^exp with exp < 0; scaled = a * 10^decimals, rounded.
    // mantissa < 2^53 and 10^20 < 2^67, so the product fits.
    let scaled_num = mantissa as u128 * 10u128.pow(decimals as u32);
    let shift = (-exp) as u32;
    let scaled: u128 = if shift >= 128 {
        0
    } else {
        let q = scaled_num >> shift;
        let rem = scaled_num - (q << shift);
        // round half away from zero: rem >= 2^(shift-1)
        if rem >= (1u128 << (shift - 1)) {
            q + 1
        } else {
            q
        }
    };

    let digits = scaled.to_string();
    if decimals == 0 {
        return format!("{sign}{digits}");
    }
    let digits = format!("{digits:0>width$}", width = decimals + 1);
    let (int, frac) = digits.split_at(digits.len() - decimals);
    format!("{sign}{int}.{frac}")
}

/// Default number-to-text rendering: three decimals, trailing zeros and a
/// bare point trimmed, negative zero shown as `0`.
pub fn format_short(x: f64) -> String {
    let mut s = format_fixed(x, 3);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

const DEG_TO_RAD: f64 = std::f64::consts::PI / 180.0;

/// Sine of an angle in degrees. The argument is reduced exactly to a quadrant
/// and an offset in [0°, 90°); multiples of 90° give exact results.
pub fn sin_deg(deg: f64) -> f64 {
    let Some((quadrant, x)) = reduce_degrees(deg) else {
        return f64::NAN;
    };
    match quadrant {
        0 => sin_first_quadrant(x),
        1 => cos_first_quadrant(x),
        2 => -sin_first_quadrant(x),
        _ => -cos_first_quadrant(x),
    }
}

/// Cosine of an angle in degrees; see [`sin_deg`].
pub fn cos_deg(deg: f64) -> f64 {
    let Some((quadrant, x)) = reduce_degrees(deg) else {
        return f64::NAN;
    };
    match quadrant {
        0 => cos_first_quadrant(x),
        1 => -sin_first_quadrant(x),
        2 => -cos_first_quadrant(x),
        _ => sin_first_quadrant(x),
    }
}

fn reduce_degrees(deg: f64) -> Option<(u8, f64)> {
    if !deg.is_finite() {
        return None;
    }
    let mut r = deg % 360.0;
    if r < 0.0 {
        r += 360.0;
    }
    if r >= 360.0 {
        r = 0.0;
    }
    // Each subtraction below is exact (Sterbenz).
    Some(if r < 90.0 {
        (0, r)
    } else if r < 180.0 {
        (1, r - 90.0)
    } else if r < 270.0 {
        (2, r - 180.0)
    } else {
        (3, r - 270.0)
    })
}

fn sin_first_quadrant(x: f64) -> f64 {
    if x <= 45.0 {
        kernel_sin(x * DEG_TO_RAD)
    } else {
        kernel_cos((90.0 - x) * DEG_TO_RAD)
    }
}

fn cos_first_quadrant(x: f64) -> f64 {
    if x <= 45.0 {
        kernel_cos(x * DEG_TO_RAD)
    } else {
        kernel_sin((90.0 - x) * DEG_TO_RAD)
    }
}

// fdlibm __kernel_sin / __kernel_cos with a zero tail, valid on [-pi/4, pi/4].
#[allow(clippy::excessive_precision)]
const S1: f64 = -1.666_666_666_666_663_243_48e-01;
#[allow(clippy::excessive_precision)]
const S2: f64 = 8.333_333_333_322_489_461_24e-03;
#[allow(clippy::excessive_precision)]
const S3: f64 = -1.984_126_982_985_794_931_34e-04;
#[allow(clippy::excessive_precision)]
const S4: f64 = 2.755_731_370_707_006_767_89e-06;
#[allow(clippy::excessive_precision)]
const S5: f64 = -2.505_076_025_340_686_341_95e-08;
#[allow(clippy::excessive_precision)]
const S6: f64 = 1.589_690_995_211_550_102_21e-10;

#[allow(clippy::excessive_precision)]
const C1: f64 = 4.166_666_666_666_660_190_37e-02;
#[allow(clippy::excessive_precision)]
const C2: f64 = -1.388_888_888_887_410_957_49e-03;
#[allow(clippy::excessive_precision)]
const C3: f64 = 2.480_158_728_947_672_941_78e-05;
#[allow(clippy::excessive_precision)]
const C4: f64 = -2.755_731_435_139_066_330_35e-07;
#[allow(clippy::excessive_precision)]
const C5: f64 = 2.087_572_321_298_174_827_90e-09;
#[allow(clippy::excessive_precision)]
const C6: f64 = -1.135_964_755_778_819_482_65e-11;

fn high_word(x: f64) -> u32 {
    (x.to_bits() >> 32) as u32
}

fn kernel_sin(x: f64) -> f64 {
    if high_word(x) & 0x7fff_ffff < 0x3e40_0000 {
        return x;
    }
    let z = x * x;
    let v = z * x;
    let r = S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)));
    x + v * (S1 + z * r)
}

fn kernel_cos(x: f64) -> f64 {
    let ix = high_word(x) & 0x7fff_ffff;
    if ix < 0x3e40_0000 {
        return 1.0;
    }
    let z = x * x;
    let r = z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    if ix < 0x3fd3_3333 {
        return 1.0 - (0.5 * z - z * r);
    }
    let qx = if ix > 0x3fe9_0000 {
        0.28125
    } else {
        f64::from_bits(((ix - 0x0020_0000) as u64) << 32)
    };
    let hz = 0.5 * z - qx;
    let a = 1.0 - qx;
    a - (hz - z * r)
}
