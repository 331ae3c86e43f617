//! Model files.
//!
//! A model file is UTF-8 text:
//!
//! ```text
//! distill-parse-model v1
//! config variant=<linear|bilstm> lstm_dim=.. lstm_layers=.. pos_dim=.. word_dim=..
//!        compose_dim=.. hidden_dim=.. labeler_hidden=.. init_seed=.. linear_init=<hex>
//!        pretrained_dim=..                                    (one line)
//! vocab forms <count>          followed by <count> lines, one item per line
//! vocab pos <count>
//! vocab labels <count>
//! vocab pretrained <count>
//! features arc <count>         followed by <count> lines of 6 integers
//! features label <count>
//! params <count>               followed by <count> lines of 16 hex digits
//! end
//! ```
//!
//! Floating-point values are written as the hexadecimal IEEE-754 bit
//! pattern, so loading reproduces the parameters bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{build_layout, FeatureIndex, FeatureKey, Interner, ScorerConfig, ScorerModel, Vocabularies};
use crate::error::{Error, Result};

const MAGIC: &str = "distill-parse-model v1";

fn hex(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn unhex(s: &str) -> Option<f64> {
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

impl ScorerModel {
    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        let c = &self.config;
        writeln!(out, "{MAGIC}")?;
        writeln!(
            out,
            "config variant={} lstm_dim={} lstm_layers={} pos_dim={} word_dim={} compose_dim={} \
             hidden_dim={} labeler_hidden={} init_seed={} linear_init={} pretrained_dim={}",
            c.variant,
            c.lstm_dim,
            c.lstm_layers,
            c.pos_dim,
            c.word_dim,
            c.compose_dim,
            c.hidden_dim,
            c.labeler_hidden,
            c.init_seed,
            hex(c.linear_init),
            self.pretrained_dim
        )?;
        for (name, interner) in [
            ("forms", &self.vocab.forms),
            ("pos", &self.vocab.pos),
            ("labels", &self.vocab.labels),
            ("pretrained", &self.vocab.pretrained),
        ] {
            writeln!(out, "vocab {name} {}", interner.len())?;
            for item in interner.items() {
                writeln!(out, "{item}")?;
            }
        }
        for (name, index) in [
            ("arc", &self.vocab.arc_features),
            ("label", &self.vocab.label_features),
        ] {
            writeln!(out, "features {name} {}", index.len())?;
            for key in index.keys() {
                let fields: Vec<String> = key.iter().map(u32::to_string).collect();
                writeln!(out, "{}", fields.join(" "))?;
            }
        }
        writeln!(out, "params {}", self.params.len())?;
        for p in &self.params {
            writeln!(out, "{}", hex(*p))?;
        }
        writeln!(out, "end")?;
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)
            .map_err(|e| Error::Model(format!("cannot open {}: {e}", path.display())))?;
        ScorerModel::read(BufReader::new(file))
    }

    pub fn read<R: BufRead>(source: R) -> Result<Self> {
        let mut lines = source.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(Error::Model(format!("unexpected end of file, expected {what}"))),
            }
        };
        let bad = |line: usize, msg: String| Error::Model(format!("line {line}: {msg}"));

        let (l, magic) = next("header")?;
        if magic.trim() != MAGIC {
            return Err(bad(l, format!("expected '{MAGIC}'")));
        }

        let (l, config_line) = next("config")?;
        let kv: std::collections::HashMap<&str, &str> = config_line
            .strip_prefix("config ")
            .ok_or_else(|| bad(l, "expected config line".into()))?
            .split_whitespace()
            .filter_map(|f| f.split_once('='))
            .collect();
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(l, format!("config lacks '{k}'")));
        let num = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| bad(l, format!("config '{k}' is not a number")))
        };
        let config = ScorerConfig {
            variant: get("variant")?.parse()?,
            lstm_dim: num("lstm_dim")?,
            lstm_layers: num("lstm_layers")?,
            pos_dim: num("pos_dim")?,
            word_dim: num("word_dim")?,
            compose_dim: num("compose_dim")?,
            hidden_dim: num("hidden_dim")?,
            labeler_hidden: num("labeler_hidden")?,
            init_seed: num("init_seed")? as u64,
            linear_init: unhex(get("linear_init")?)
                .ok_or_else(|| bad(l, "bad linear_init".into()))?,
        };
        let pretrained_dim = num("pretrained_dim")?;

        let mut vocab = Vocabularies::default();
        let mut read_items = |name: &str| -> Result<Vec<String>> {
            let (l, line) = next(name)?;
            let mut f = line.split_whitespace();
            if f.next() != Some("vocab") || f.next() != Some(name) {
                return Err(bad(l, format!("expected 'vocab {name} <count>'")));
            }
            let count: usize = f
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad(l, "missing count".into()))?;
            (0..count).map(|_| next(name).map(|(_, s)| s)).collect()
        };
        vocab.forms = Interner::from_items(read_items("forms")?);
        vocab.pos = Interner::from_items(read_items("pos")?);
        vocab.labels = Interner::from_items(read_items("labels")?);
        vocab.pretrained = Interner::from_items(read_items("pretrained")?);

        let mut read_features = |name: &str| -> Result<Vec<FeatureKey>> {
            let (l, line) = next(name)?;
            let mut f = line.split_whitespace();
            if f.next() != Some("features") || f.next() != Some(name) {
                return Err(bad(l, format!("expected 'features {name} <count>'")));
            }
            let count: usize = f
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| bad(l, "missing count".into()))?;
            (0..count)
                .map(|_| {
                    let (l, line) = next(name)?;
                    let values: Vec<u32> = line
                        .split_whitespace()
                        .map(|x| x.parse().map_err(|_| bad(l, format!("bad feature id '{x}'"))))
                        .collect::<Result<_>>()?;
                    values
                        .try_into()
                        .map_err(|_| bad(l, "a feature key has 6 fields".into()))
                })
                .collect()
        };
        vocab.arc_features = FeatureIndex::from_keys(read_features("arc")?);
        vocab.label_features = FeatureIndex::from_keys(read_features("label")?);

        let (l, line) = next("params")?;
        let count: usize = line
            .strip_prefix("params ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| bad(l, "expected 'params <count>'".into()))?;
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let (l, line) = next("parameter")?;
            params.push(unhex(line.trim()).ok_or_else(|| bad(l, format!("bad parameter '{line}'")))?);
        }
        let (l, end) = next("end")?;
        if end.trim() != "end" {
            return Err(bad(l, "expected 'end'".into()));
        }

        let layout = build_layout(&config, &vocab, pretrained_dim);
        if layout.total() != params.len() {
            return Err(Error::Model(format!(
                "layout needs {} parameters, file has {}",
                layout.total(),
                params.len()
            )));
        }
        Ok(ScorerModel {
            config,
            vocab,
            layout,
            params,
            pretrained_dim,
        })
    }
}
