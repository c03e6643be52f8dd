//! Plain-text weight files.
//!
//! ```text
//! epicast-network 1
//! architecture vanilla
//! n_n 100
//! ...
//! scaler last_value
//! tensors 5
//! tensor lstm.w_x 2 400 1
//! 0.0123 -0.04 ...
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! reload reproduces the weights bit for bit.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::network::{NetworkModel, Scaler};
use super::params::{ParamSet, Tensor};
use super::NetworkConfig;
use crate::error::{Error, Result};

const MAGIC: &str = "epicast-network 1";

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn checkpoint_string(model: &NetworkModel) -> String {
    let c = model.config();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "architecture {}", c.architecture);
    let _ = writeln!(out, "n_n {}", c.n_n);
    let _ = writeln!(out, "n_f {}", c.n_f);
    let _ = writeln!(out, "kernel_size {}", c.kernel_size);
    let _ = writeln!(out, "pool_size {}", c.pool_size);
    let _ = writeln!(out, "learning_rate {}", c.learning_rate);
    let _ = writeln!(out, "epochs {}", c.epochs);
    let _ = writeln!(out, "seed {}", c.seed);
    let _ = writeln!(out, "n_s {}", c.n_s);
    let scaler = match model.scaler() {
        Scaler::LastValue => "last_value",
    };
    let _ = writeln!(out, "scaler {scaler}");
    let tensors = model.params().tensors();
    let _ = writeln!(out, "tensors {}", tensors.len());
    for t in tensors {
        let dims: Vec<String> = t.shape.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(
            out,
            "tensor {} {} {}",
            t.name,
            t.shape.len(),
            dims.join(" ")
        );
        let vals: Vec<String> = t.data.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", vals.join(" "));
    }
    out
}

pub fn write_checkpoint<W: Write>(model: &NetworkModel, mut w: W) -> Result<()> {
    w.write_all(checkpoint_string(model).as_bytes())
        .map_err(|e| bad(e.to_string()))
}

fn field<'a>(
    lines: &mut impl Iterator<Item = String>,
    key: &str,
    buf: &'a mut String,
) -> Result<&'a str> {
    *buf = lines.next().ok_or_else(|| bad(format!("missing {key}")))?;
    buf.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| bad(format!("expected {key}")))
}

fn parse<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("bad value for {key}: {s:?}")))
}

pub fn read_checkpoint<R: BufRead>(r: R) -> Result<NetworkModel> {
    let mut lines = r.lines().map(|l| l.unwrap_or_default());
    if lines.next().as_deref() != Some(MAGIC) {
        return Err(bad("not an epicast network file"));
    }
    let mut buf = String::new();
    let architecture = parse(field(&mut lines, "architecture", &mut buf)?, "architecture")?;
    let n_n = parse(field(&mut lines, "n_n", &mut buf)?, "n_n")?;
    let n_f = parse(field(&mut lines, "n_f", &mut buf)?, "n_f")?;
    let kernel_size = parse(field(&mut lines, "kernel_size", &mut buf)?, "kernel_size")?;
    let pool_size = parse(field(&mut lines, "pool_size", &mut buf)?, "pool_size")?;
    let learning_rate = parse(
        field(&mut lines, "learning_rate", &mut buf)?,
        "learning_rate",
    )?;
    let epochs = parse(field(&mut lines, "epochs", &mut buf)?, "epochs")?;
    let seed = parse(field(&mut lines, "seed", &mut buf)?, "seed")?;
    let n_s = parse(field(&mut lines, "n_s", &mut buf)?, "n_s")?;
    let scaler = match field(&mut lines, "scaler", &mut buf)? {
        "last_value" => Scaler::LastValue,
        other => return Err(bad(format!("unknown scaler {other:?}"))),
    };
    let count: usize = parse(field(&mut lines, "tensors", &mut buf)?, "tensors")?;
    let mut params = ParamSet::new();
    for _ in 0..count {
        let header = field(&mut lines, "tensor", &mut buf)?.to_string();
        let mut parts = header.split_whitespace();
        let name = parts.next().ok_or_else(|| bad("tensor name"))?.to_string();
        let rank: usize = parse(parts.next().unwrap_or(""), "rank")?;
        let shape = parts
            .map(|d| parse(d, "dim"))
            .collect::<Result<Vec<usize>>>()?;
        if shape.len() != rank {
            return Err(bad(format!("{name}: rank {rank} but {} dims", shape.len())));
        }
        let data_line = lines
            .next()
            .ok_or_else(|| bad(format!("{name}: missing values")))?;
        let data = data_line
            .split_whitespace()
            .map(|v| parse(v, &name))
            .collect::<Result<Vec<f64>>>()?;
        let tensor = Tensor { name, shape, data };
        if tensor.len() != tensor.shape.iter().product::<usize>() {
            return Err(bad(format!("{}: wrong value count", tensor.name)));
        }
        let idx = params.push(tensor.name.clone(), &tensor.shape);
        params.get_mut(idx).copy_from_slice(&tensor.data);
    }
    let config = NetworkConfig {
        architecture,
        n_n,
        n_f,
        kernel_size,
        pool_size,
        learning_rate,
        epochs,
        seed,
        n_s,
    };
    NetworkModel::from_parts(config, params, scaler)
}
