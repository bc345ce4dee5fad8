use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hhash_core::formats::{self, FileInfo};
use hhash_core::{
    fit, generate_rotated_hypercube, itq_fit, map_at_k, sign_binarize, EmbeddingSet, ItqConfig, LossKind, RowMatrix,
    SynthConfig, TrainConfig,
};

use super::{Command, EvalArgs, FitArgs, HashArgs, InfoArgs, ItqArgs, SynthArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Itq(a) => itq(a),
        Command::Hash(a) => hash(a),
        Command::Eval(a) => eval(a),
        Command::Info(a) => info(a),
    }
}

fn read_emb(path: &Path) -> Result<EmbeddingSet> {
    formats::read_embeddings(path).with_context(|| format!("reading {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::new(a.n_per_class, a.classes, a.bits, a.sigma, a.seed);
    if let Some(q) = a.query_per_class {
        cfg.query_per_class = q;
        cfg.database_per_class = 4 * q;
    }
    if let Some(d) = a.db_per_class {
        cfg.database_per_class = d;
    }
    let data = generate_rotated_hypercube(&cfg)?;
    for (name, set) in [("train", &data.train), ("query", &data.query), ("db", &data.database)] {
        let emb = format!("{}.{name}.emb", a.out_prefix);
        let labels = format!("{}.{name}.labels", a.out_prefix);
        formats::write_embeddings(&emb, set).with_context(|| format!("writing {emb}"))?;
        formats::write_labels(&labels, set.labels().unwrap_or_default()).with_context(|| format!("writing {labels}"))?;
        println!("{emb}: n = {}, k = {}", set.len(), set.dim());
    }
    Ok(())
}

fn fit_cmd(a: FitArgs) -> Result<()> {
    let loss: LossKind = a.loss.parse()?;
    let e = read_emb(&a.embeddings)?;
    let mut cfg = TrainConfig::new(loss).with_seed(a.seed).with_epochs(a.epochs);
    cfg.batch_size = a.batch;
    if let Some(lr) = a.lr {
        cfg.learning_rate = lr;
    }
    let (stack, report) = fit(&e, &cfg)?;
    formats::write_rotation(&a.out, &stack).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(log) = &a.log {
        let mut text = String::new();
        for (epoch, loss) in report.epoch_losses.iter().enumerate() {
            writeln!(text, "{epoch}\t{loss}")?;
        }
        fs::write(log, text).with_context(|| format!("writing {}", log.display()))?;
    }
    println!("initial_loss = {}", report.initial_loss);
    println!("final_loss = {}", report.final_loss);
    Ok(())
}

fn itq(a: ItqArgs) -> Result<()> {
    let e = read_emb(&a.embeddings)?;
    let cfg = ItqConfig {
        iterations: a.iters,
        seed: a.seed,
        center: a.center,
    };
    let model = itq_fit(&e, &cfg)?;
    let stack = model.to_stack()?;
    formats::write_rotation(&a.out, &stack).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(mean) = &model.mean {
        let path = with_suffix(&a.out, ".mean");
        let row = EmbeddingSet::new(RowMatrix::from_vec(1, mean.len(), mean.clone())?);
        formats::write_embeddings(&path, &row).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(last) = model.objectives.last() {
        println!("objective = {last}");
    }
    Ok(())
}

fn hash(a: HashArgs) -> Result<()> {
    let mut e = read_emb(&a.embeddings)?;
    if let Some(path) = &a.mean {
        let mean = read_emb(path)?;
        if mean.len() != 1 {
            bail!("{}: expected a single row of means, found {}", path.display(), mean.len());
        }
        e = e.subtract(mean.row(0))?;
    }
    let stack = match &a.rotation {
        Some(p) => Some(formats::read_rotation(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let codes = sign_binarize(&e, stack.as_ref())?;
    formats::write_codes(&a.out, &codes).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn load_side(emb: &Path, hash: &Path, labels: &Path) -> Result<(EmbeddingSet, hhash_core::BitCodeSet)> {
    let mut e = read_emb(emb)?;
    let l = formats::read_labels(labels).with_context(|| format!("reading {}", labels.display()))?;
    e.set_labels(l).with_context(|| format!("{} does not match {}", labels.display(), emb.display()))?;
    let c = formats::read_codes(hash).with_context(|| format!("reading {}", hash.display()))?;
    if c.len() != e.len() {
        bail!("{} holds {} codes but {} holds {} embeddings", hash.display(), c.len(), emb.display(), e.len());
    }
    Ok((e, c))
}

fn eval(a: EvalArgs) -> Result<()> {
    if a.k == 0 {
        bail!("--k must be at least 1");
    }
    let (q, qc) = load_side(&a.query_emb, &a.query_hash, &a.query_labels)?;
    let (db, dc) = load_side(&a.db_emb, &a.db_hash, &a.db_labels)?;
    let result = map_at_k(&q, &qc, &db, &dc, a.k)?;
    println!("map@{} = {}", a.k, result.map_at_k);
    if a.verbose {
        for ap in &result.per_query_ap {
            println!("{ap}");
        }
    }
    Ok(())
}

fn info(a: InfoArgs) -> Result<()> {
    for path in &a.files {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let is_binary = [formats::EMB_MAGIC, formats::ROT_MAGIC, formats::HSH_MAGIC]
            .iter()
            .any(|m| bytes.starts_with(&m[..]));
        let line = if is_binary {
            match formats::inspect(&bytes).with_context(|| path.display().to_string())? {
                FileInfo::Embeddings { n, k } => format!("EMB1 n={n} k={k}"),
                FileInfo::Rotation { k, m } => format!("ROT1 k={k} m={m}"),
                FileInfo::Codes { n, k } => format!("HSH1 n={n} k={k} bytes_per_code={}", k.div_ceil(8)),
            }
        } else {
            let text = std::str::from_utf8(&bytes).with_context(|| format!("{}: unknown format", path.display()))?;
            let labels = formats::decode_labels(text).with_context(|| path.display().to_string())?;
            let unlabeled = labels.iter().filter(|l| l.is_empty()).count();
            format!("labels n={} unlabeled={unlabeled}", labels.len())
        };
        println!("{}: {line}", path.display());
    }
    Ok(())
}
