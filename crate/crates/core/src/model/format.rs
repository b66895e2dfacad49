//! Line-oriented text formats.
//!
//! Model files:
//!
//! ```text
//! ising <M> <beta>
//! e <i> <j> <J_ij>        # zero or more, 0-based, i < j on write
//! h <i> <h_i>             # zero or more; absent fields are 0
//! bipartition <k>         # optional: spins 0..k form one layer
//! ```
//!
//! RBM weight files hold a trained machine in the `{0,1}` unit convention
//! with energy `E(v, h) = -vᵀWh - bᵀv - cᵀh`:
//!
//! ```text
//! rbm <n_visible> <n_hidden>
//! w <v> <h> <W_vh>
//! b <v> <b_v>
//! c <h> <c_h>
//! ```
//!
//! Substituting `x = (s + 1) / 2` gives the spin form, up to an additive constant:
//! `J_vh = W_vh / 4`, `h_v = b_v / 2 + Σ_h W_vh / 4`, `h_h = c_h / 2 + Σ_v W_vh / 4`.
//!
//! Blank lines and text after `#` are ignored in both formats.

use std::fmt::Write as _;

use super::{Edge, IsingModel, ModelError};

/// Upper bound on the spin count a file may declare.
pub const MAX_FILE_SPINS: usize = 1 << 22;

fn parse_err(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Parse {
        line,
        message: message.into(),
    }
}

/// Yields `(1-based line number, tokens)` for every non-empty line.
fn tokenized(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        (!toks.is_empty()).then_some((n + 1, toks))
    })
}

fn num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T, ModelError> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

fn real(line: usize, tok: &str, what: &str) -> Result<f64, ModelError> {
    let v: f64 = num(line, tok, what)?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what} must be finite")));
    }
    Ok(v)
}

fn arity(line: usize, toks: &[&str], n: usize) -> Result<(), ModelError> {
    if toks.len() != n {
        return Err(parse_err(
            line,
            format!("`{}` expects {} values, got {}", toks[0], n - 1, toks.len() - 1),
        ));
    }
    Ok(())
}

fn index(line: usize, tok: &str, len: usize) -> Result<usize, ModelError> {
    let i: usize = num(line, tok, "index")?;
    if i >= len {
        return Err(parse_err(line, format!("index {i} out of range for {len}")));
    }
    Ok(i)
}

pub fn parse_model(text: &str) -> Result<IsingModel, ModelError> {
    let mut lines = tokenized(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing `ising M beta` header"))?;
    if header[0] != "ising" {
        return Err(parse_err(hline, "first line must be `ising M beta`"));
    }
    arity(hline, &header, 3)?;
    let m: usize = num(hline, header[1], "spin count")?;
    if m == 0 || m > MAX_FILE_SPINS {
        return Err(parse_err(hline, format!("spin count {m} out of range")));
    }
    let beta = real(hline, header[2], "beta")?;

    let mut edges = Vec::new();
    let mut fields = vec![0.0; m];
    let mut field_seen = vec![false; m];
    let mut bipartition = None;
    for (line, toks) in lines {
        match toks[0] {
            "e" => {
                arity(line, &toks, 4)?;
                let i = index(line, toks[1], m)?;
                let j = index(line, toks[2], m)?;
                let coupling = real(line, toks[3], "coupling")?;
                edges.push(Edge { i, j, coupling });
            }
            "h" => {
                arity(line, &toks, 3)?;
                let i = index(line, toks[1], m)?;
                if std::mem::replace(&mut field_seen[i], true) {
                    return Err(parse_err(line, format!("duplicate field for spin {i}")));
                }
                fields[i] = real(line, toks[2], "field")?;
            }
            "bipartition" => {
                arity(line, &toks, 2)?;
                if bipartition.is_some() {
                    return Err(parse_err(line, "duplicate bipartition line"));
                }
                bipartition = Some(num::<usize>(line, toks[1], "layer size")?);
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }
    let model = IsingModel::new(m, beta, edges, fields)?;
    match bipartition {
        Some(k) => model.with_bipartition(k),
        None => Ok(model),
    }
}

/// Deterministic serialization: edges in lexicographic order, nonzero fields only.
pub fn write_model(model: &IsingModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ising {} {}", model.num_spins(), model.beta());
    for e in model.edges() {
        let _ = writeln!(out, "e {} {} {}", e.i, e.j, e.coupling);
    }
    for (i, h) in model.fields().iter().enumerate() {
        if *h != 0.0 {
            let _ = writeln!(out, "h {i} {h}");
        }
    }
    if let Some(k) = model.bipartition() {
        let _ = writeln!(out, "bipartition {k}");
    }
    out
}

/// RBM parameters in the `{0,1}` unit convention.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmWeights {
    pub n_visible: usize,
    pub n_hidden: usize,
    /// Row-major `W[v * n_hidden + h]`.
    pub weights: Vec<f64>,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
}

impl RbmWeights {
    /// Edges and fields of the equivalent spin model (constant offset dropped).
    pub fn to_spin_form(&self) -> (Vec<Edge>, Vec<f64>) {
        let (nv, nh) = (self.n_visible, self.n_hidden);
        let mut fields = vec![0.0; nv + nh];
        let mut edges = Vec::with_capacity(nv * nh);
        for v in 0..nv {
            fields[v] += self.visible_bias[v] / 2.0;
        }
        for h in 0..nh {
            fields[nv + h] += self.hidden_bias[h] / 2.0;
        }
        for v in 0..nv {
            for h in 0..nh {
                let w = self.weights[v * nh + h];
                fields[v] += w / 4.0;
                fields[nv + h] += w / 4.0;
                edges.push(Edge {
                    i: v,
                    j: nv + h,
                    coupling: w / 4.0,
                });
            }
        }
        (edges, fields)
    }
}

pub fn parse_rbm_weights(text: &str) -> Result<RbmWeights, ModelError> {
    let mut lines = tokenized(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing `rbm n_visible n_hidden` header"))?;
    if header[0] != "rbm" {
        return Err(parse_err(hline, "first line must be `rbm n_visible n_hidden`"));
    }
    arity(hline, &header, 3)?;
    let nv: usize = num(hline, header[1], "visible count")?;
    let nh: usize = num(hline, header[2], "hidden count")?;
    if nv == 0 || nh == 0 || nv.saturating_mul(nh) > MAX_FILE_SPINS {
        return Err(parse_err(hline, "layer sizes out of range"));
    }
    let mut w = RbmWeights {
        n_visible: nv,
        n_hidden: nh,
        weights: vec![0.0; nv * nh],
        visible_bias: vec![0.0; nv],
        hidden_bias: vec![0.0; nh],
    };
    for (line, toks) in lines {
        match toks[0] {
            "w" => {
                arity(line, &toks, 4)?;
                let v = index(line, toks[1], nv)?;
                let h = index(line, toks[2], nh)?;
                w.weights[v * nh + h] = real(line, toks[3], "weight")?;
            }
            "b" => {
                arity(line, &toks, 3)?;
                let v = index(line, toks[1], nv)?;
                w.visible_bias[v] = real(line, toks[2], "visible bias")?;
            }
            "c" => {
                arity(line, &toks, 3)?;
                let h = index(line, toks[1], nh)?;
                w.hidden_bias[h] = real(line, toks[2], "hidden bias")?;
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }
    Ok(w)
}
