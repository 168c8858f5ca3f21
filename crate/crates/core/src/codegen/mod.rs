//! Emits a trained tree as a freestanding C header.
//!
//! The header defines one `static inline int SYMBOL(...)` taking one scalar
//! per masked feature (in `FeatureId` order) and returning the class index.
//! The body is nested `if (x <= t) { .. } else { .. }` blocks mirroring the
//! tree, so the worst-case comparison count equals the tree depth.
//!
//! Thresholds are adjusted per value type so that the C comparison agrees
//! with the reference `f64` comparison for every representable argument:
//!
//! * `double`: the threshold itself, shortest round-trip decimal.
//! * `float`: the largest `f32` not above the threshold.
//! * `int16`: arguments are fixed point, `q = round(x * scale)`; the literal
//!   is the largest integer `Q` with `Q / scale <= t`.

mod interp;
mod vectors;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use sha2::{Digest, Sha256};

pub use interp::Program;
pub use vectors::{emit_eval_vectors, EvalVectors};

use crate::cart::{TreeModel, TreeNode};
use crate::error::{Error, Result};
use crate::features::FeatureId;

pub const DEFAULT_INT16_SCALE: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Float,
    Double,
    /// Fixed point: C argument is `round(value * scale)` as a 16-bit integer.
    Int16 {
        scale: u32,
    },
}

impl ValueType {
    pub fn c_type(self) -> &'static str {
        match self {
            ValueType::Float => "float",
            ValueType::Double => "double",
            ValueType::Int16 { .. } => "short",
        }
    }

    /// Nearest value the C argument can hold, expressed in the C domain
    /// (fixed-point integers for `Int16`).
    pub fn to_c_domain(self, x: f64) -> f64 {
        match self {
            ValueType::Double => x,
            ValueType::Float => x as f32 as f64,
            ValueType::Int16 { scale } => (x * f64::from(scale))
                .round()
                .clamp(f64::from(i16::MIN), f64::from(i16::MAX)),
        }
    }

    /// Real value represented by a C-domain argument.
    pub fn to_reference(self, c: f64) -> f64 {
        match self {
            ValueType::Int16 { scale } => c / f64::from(scale),
            _ => c,
        }
    }

    pub fn format_c_value(self, c: f64) -> String {
        match self {
            ValueType::Double => format!("{c:?}"),
            ValueType::Float => format!("{:?}", c as f32),
            ValueType::Int16 { .. } => format!("{}", c as i64),
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Float => f.write_str("float"),
            ValueType::Double => f.write_str("double"),
            ValueType::Int16 { .. } => f.write_str("int16"),
        }
    }
}

impl FromStr for ValueType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "float" => Ok(ValueType::Float),
            "double" => Ok(ValueType::Double),
            "int16" => Ok(ValueType::Int16 {
                scale: DEFAULT_INT16_SCALE,
            }),
            other => Err(Error::Config(format!("unknown value type {other:?}"))),
        }
    }
}

/// The C-domain threshold for reference threshold `t`. The comparison
/// `arg <= literal` in C then matches `reference(arg) <= t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CThreshold {
    Float(f32),
    Double(f64),
    Int(i64),
}

impl CThreshold {
    pub fn new(t: f64, vt: ValueType) -> Result<Self> {
        match vt {
            ValueType::Double => Ok(CThreshold::Double(t)),
            ValueType::Float => {
                let mut f = t as f32;
                if f as f64 > t {
                    f = f.next_down();
                }
                if !f.is_finite() {
                    return Err(Error::Config(format!("threshold {t} outside float range")));
                }
                Ok(CThreshold::Float(f))
            }
            ValueType::Int16 { scale } => {
                let s = f64::from(scale);
                let lo = i64::from(i16::MIN) - 1;
                let hi = i64::from(i16::MAX);
                let mut q = ((t * s).floor() as i64).clamp(lo, hi);
                while q < hi && (q + 1) as f64 / s <= t {
                    q += 1;
                }
                while q > lo && q as f64 / s > t {
                    q -= 1;
                }
                Ok(CThreshold::Int(q))
            }
        }
    }

    pub fn literal(self) -> String {
        match self {
            CThreshold::Float(f) => format!("{f:?}f"),
            CThreshold::Double(d) => format!("{d:?}"),
            CThreshold::Int(i) => i.to_string(),
        }
    }

    /// Threshold in the C domain as `f64`.
    pub fn as_c_value(self) -> f64 {
        match self {
            CThreshold::Float(f) => f as f64,
            CThreshold::Double(d) => d,
            CThreshold::Int(i) => i as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodegenOptions {
    pub symbol: String,
    pub value_type: ValueType,
}

impl Default for CodegenOptions {
    fn default() -> Self {
        CodegenOptions {
            symbol: "classify_behaviour".into(),
            value_type: ValueType::Float,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmittedClassifier {
    pub source: String,
    pub symbol: String,
    pub features: Vec<FeatureId>,
    pub value_type: ValueType,
    pub worst_case_comparisons: usize,
    /// SHA-256 of the portable model text, hex.
    pub fingerprint: String,
}

pub fn model_fingerprint(m: &TreeModel) -> String {
    hex::encode(Sha256::digest(m.serialize().as_bytes()))
}

const C_KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Bool",
    "_Complex",
    "_Imaginary",
];

pub fn validate_symbol(symbol: &str) -> Result<()> {
    let mut chars = symbol.chars();
    let head_ok = chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    if !head_ok || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Error::Config(format!("{symbol:?} is not a C identifier")));
    }
    if symbol.len() > 63 || C_KEYWORDS.contains(&symbol) {
        return Err(Error::Config(format!(
            "{symbol:?} cannot be used as a C symbol"
        )));
    }
    if FeatureId::ALL.iter().any(|f| param_name(*f) == symbol) {
        return Err(Error::Config(format!(
            "{symbol:?} clashes with a parameter name"
        )));
    }
    Ok(())
}

pub fn param_name(f: FeatureId) -> String {
    f.name().to_ascii_lowercase()
}

pub fn emit_header(m: &TreeModel, opts: &CodegenOptions) -> Result<EmittedClassifier> {
    validate_symbol(&opts.symbol)?;
    let features: Vec<FeatureId> = m.feature_mask.features().collect();
    let depth = m.depth();
    let fingerprint = model_fingerprint(m);
    let sym = &opts.symbol;
    let upper = sym.to_ascii_uppercase();
    let vt = opts.value_type;

    let mut used = [false; FeatureId::ALL.len()];
    m.root.walk(&mut |n| {
        if let TreeNode::Internal { feature, .. } = n {
            used[feature.index()] = true;
        }
    });

    let mut s = String::new();
    s.push_str("/*\n");
    let _ = writeln!(
        s,
        " * Decision tree classifier `{sym}`, generated by behavtx."
    );
    let names: Vec<String> = m
        .behaviours
        .iter()
        .enumerate()
        .map(|(i, b)| format!("{i}={b}"))
        .collect();
    let _ = writeln!(s, " * behaviours: {}", names.join(" "));
    let params: Vec<String> = features.iter().map(|f| param_name(*f)).collect();
    let _ = writeln!(s, " * features: {}", params.join(" "));
    match vt {
        ValueType::Int16 { scale } => {
            let _ = writeln!(
                s,
                " * values: int16 fixed point, argument = round(value * {scale})"
            );
        }
        other => {
            let _ = writeln!(s, " * values: {other}");
        }
    }
    let _ = writeln!(s, " * depth: {depth} (max_depth {})", m.max_depth);
    let _ = writeln!(s, " * worst-case comparisons: {depth}");
    let _ = writeln!(s, " * model fingerprint: sha256:{fingerprint}");
    s.push_str(" */\n");
    let _ = writeln!(s, "#ifndef {upper}_H_");
    let _ = writeln!(s, "#define {upper}_H_");
    s.push('\n');
    let _ = writeln!(s, "#define {upper}_N_BEHAVIOURS {}", m.behaviours.len());
    let _ = writeln!(
        s,
        "static const char *const {sym}_behaviours[{}] = {{",
        m.behaviours.len()
    );
    for b in &m.behaviours {
        let _ = writeln!(s, "    \"{b}\",");
    }
    s.push_str("};\n\n");
    let args: Vec<String> = params
        .iter()
        .map(|p| format!("{} {p}", vt.c_type()))
        .collect();
    let _ = writeln!(s, "static inline int {sym}({})", args.join(", "));
    s.push_str("{\n");
    for f in &features {
        if !used[f.index()] {
            let _ = writeln!(s, "    (void){};", param_name(*f));
        }
    }
    emit_node(&m.root, vt, 1, &mut s)?;
    s.push_str("}\n\n");
    let _ = writeln!(s, "#endif /* {upper}_H_ */");

    Ok(EmittedClassifier {
        source: s,
        symbol: sym.clone(),
        features,
        value_type: vt,
        worst_case_comparisons: depth,
        fingerprint,
    })
}

fn emit_node(node: &TreeNode, vt: ValueType, level: usize, s: &mut String) -> Result<()> {
    let pad = "    ".repeat(level);
    match node {
        TreeNode::Leaf { class, .. } => {
            let _ = writeln!(s, "{pad}return {class};");
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            let lit = CThreshold::new(*threshold, vt)?.literal();
            let _ = writeln!(s, "{pad}if ({} <= {lit}) {{", param_name(*feature));
            emit_node(left, vt, level + 1, s)?;
            let _ = writeln!(s, "{pad}}} else {{");
            emit_node(right, vt, level + 1, s)?;
            let _ = writeln!(s, "{pad}}}");
        }
    }
    Ok(())
}
