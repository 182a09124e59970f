use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use super::{KgcConfig, KgcError};

/// Entity vectors, one row per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    pub vectors: Tensor,
}

impl EmbeddingTable {
    /// Uniform initialisation in `±0.5/sqrt(dim)`.
    pub fn random(ids: &[String], dim: usize, rng: &mut impl Rng) -> EmbeddingTable {
        let bound = 0.5 / (dim as f64).sqrt();
        let data = (0..ids.len() * dim)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        EmbeddingTable::from_tensor(ids.to_vec(), Tensor::from_vec(ids.len(), dim, data))
    }

    /// # Panics
    /// If the row count differs from the id count.
    pub fn from_tensor(ids: Vec<String>, vectors: Tensor) -> EmbeddingTable {
        assert_eq!(ids.len(), vectors.rows, "one row per entity");
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        EmbeddingTable {
            ids,
            index,
            vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize, KgcError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| KgcError::UnknownEntity(id.to_owned()))
    }

    pub fn get(&self, id: &str) -> Result<&[f64], KgcError> {
        Ok(self.vectors.row(self.index_of(id)?))
    }

    pub fn set(&mut self, id: &str, v: &[f64]) -> Result<(), KgcError> {
        let i = self.index_of(id)?;
        check_len("embedding", self.dim(), v.len())?;
        self.vectors.row_mut(i).copy_from_slice(v);
        Ok(())
    }
}

fn check_len(what: &str, expected: usize, got: usize) -> Result<(), KgcError> {
    if expected == got {
        Ok(())
    } else {
        Err(KgcError::ShapeMismatch {
            what: what.to_owned(),
            expected: (1, expected),
            got: (1, got),
        })
    }
}

/// All learnable model tensors, keyed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: KgcConfig,
    pub tensors: BTreeMap<String, Tensor>,
}

fn layer_key(l: usize, part: &str) -> String {
    format!("layer{l}.{part}")
}

impl ModelParams {
    /// Every tensor name with its shape.
    pub fn expected_shapes(c: &KgcConfig) -> Vec<(String, (usize, usize))> {
        let d = c.dim;
        let f = d * c.ffn_mult;
        let mut v = vec![
            (
                "conv.kernel".to_owned(),
                (c.channels, c.kernel_h * c.kernel_w),
            ),
            ("meta.weight".to_owned(), (c.feature_width(), d)),
            ("meta.bias".to_owned(), (1, d)),
            ("pos.head".to_owned(), (1, d)),
            ("pos.relation".to_owned(), (1, d)),
            ("pos.tail".to_owned(), (1, d)),
        ];
        for l in 0..c.layers {
            for (part, shape) in [
                ("attn.q.weight", (d, d)),
                ("attn.q.bias", (1, d)),
                ("attn.k.weight", (d, d)),
                ("attn.k.bias", (1, d)),
                ("attn.v.weight", (d, d)),
                ("attn.v.bias", (1, d)),
                ("attn.o.weight", (d, d)),
                ("attn.o.bias", (1, d)),
                ("ln1.gain", (1, d)),
                ("ln1.shift", (1, d)),
                ("ffn.in.weight", (d, f)),
                ("ffn.in.bias", (1, f)),
                ("ffn.out.weight", (f, d)),
                ("ffn.out.bias", (1, d)),
                ("ln2.gain", (1, d)),
                ("ln2.shift", (1, d)),
            ] {
                v.push((layer_key(l, part), shape));
            }
        }
        v
    }

    /// Random weights scaled by fan-in; biases and norm shifts zero, norm
    /// gains one.
    pub fn init(config: &KgcConfig, rng: &mut impl Rng) -> Result<ModelParams, KgcError> {
        config.validate()?;
        let mut tensors = BTreeMap::new();
        for (name, (r, c)) in Self::expected_shapes(config) {
            let t = if name.ends_with(".gain") {
                Tensor::filled(r, c, 1.0)
            } else if name.ends_with(".bias") || name.ends_with(".shift") {
                Tensor::zeros(r, c)
            } else {
                let fan_in = if name == "conv.kernel" { c } else { r };
                let bound = if name.starts_with("pos.") {
                    0.5 / (config.dim as f64).sqrt()
                } else {
                    1.0 / (fan_in as f64).sqrt()
                };
                Tensor::from_vec(
                    r,
                    c,
                    (0..r * c)
                        .map(|_| rng.random_range(-bound..=bound))
                        .collect(),
                )
            };
            tensors.insert(name, t);
        }
        Ok(ModelParams {
            config: config.clone(),
            tensors,
        })
    }

    /// Checks that `tensors` holds exactly the expected names and shapes.
    pub fn from_tensors(
        config: KgcConfig,
        tensors: BTreeMap<String, Tensor>,
    ) -> Result<ModelParams, KgcError> {
        config.validate()?;
        let expected = Self::expected_shapes(&config);
        if expected.len() != tensors.len() {
            return Err(KgcError::InvalidConfig(format!(
                "expected {} tensors, found {}",
                expected.len(),
                tensors.len()
            )));
        }
        for (name, shape) in expected {
            let t = tensors
                .get(&name)
                .ok_or_else(|| KgcError::InvalidConfig(format!("missing tensor {name}")))?;
            if t.shape() != shape || t.data.len() != shape.0 * shape.1 {
                return Err(KgcError::ShapeMismatch {
                    what: name,
                    expected: shape,
                    got: t.shape(),
                });
            }
        }
        Ok(ModelParams { config, tensors })
    }

    pub fn get(&self, name: &str) -> &Tensor {
        &self.tensors[name]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor {
        self.tensors.get_mut(name).expect("known tensor name")
    }

    pub fn margin(&self) -> f64 {
        self.config.margin
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.values().all(Tensor::is_finite)
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }
}

/// Support pairs, queries, and one tail-corrupted negative per query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotTask {
    pub relation: String,
    pub support: Vec<(String, String)>,
    pub queries: Vec<(String, String)>,
    pub negatives: Vec<(String, String)>,
}

impl FewShotTask {
    pub fn validate(&self, support_size: usize) -> Result<(), KgcError> {
        if self.support.len() != support_size {
            return Err(KgcError::ShapeMismatch {
                what: "support set".into(),
                expected: (support_size, 2),
                got: (self.support.len(), 2),
            });
        }
        if self.queries.len() != self.negatives.len() {
            return Err(KgcError::UnpairedNegatives {
                queries: self.queries.len(),
                negatives: self.negatives.len(),
            });
        }
        for (i, (q, n)) in self.queries.iter().zip(&self.negatives).enumerate() {
            if q.0 != n.0 || q.1 == n.1 {
                return Err(KgcError::BadNegative(i));
            }
        }
        Ok(())
    }
}

/// Per-pair and aggregated relation vectors of a support set.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationMeta {
    pub per_pair: Vec<Vec<f64>>,
    /// Mean of `per_pair`.
    pub r_s: Vec<f64>,
    /// Mean tail-minus-head offset.
    pub r_0: Vec<f64>,
}

/// Final hidden states of the three positions, plus every layer's output.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTriple {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
    pub layers: Vec<Tensor>,
}

/// Gradients for every model tensor and for the embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: BTreeMap<String, Tensor>,
    pub embeddings: Tensor,
}

/// Parameters and embeddings placed on a tape.
struct Bound {
    vars: BTreeMap<String, Var>,
    table: Var,
}

impl Bound {
    fn new(tape: &mut Tape, params: &ModelParams, emb: Option<&EmbeddingTable>) -> Bound {
        let vars = params
            .tensors
            .iter()
            .map(|(k, t)| (k.clone(), tape.leaf(t.clone())))
            .collect();
        let table = match emb {
            Some(e) => tape.leaf(e.vectors.clone()),
            None => tape.leaf(Tensor::zeros(0, params.config.dim)),
        };
        Bound { vars, table }
    }

    fn p(&self, name: &str) -> Var {
        self.vars[name]
    }
}

fn check_dims(params: &ModelParams, emb: &EmbeddingTable) -> Result<(), KgcError> {
    if emb.dim() == params.config.dim {
        Ok(())
    } else {
        Err(KgcError::ShapeMismatch {
            what: "embedding table".into(),
            expected: (emb.len(), params.config.dim),
            got: emb.vectors.shape(),
        })
    }
}

fn support_rows(
    emb: &EmbeddingTable,
    support: &[(String, String)],
) -> Result<Vec<(usize, usize)>, KgcError> {
    support
        .iter()
        .map(|(h, t)| Ok((emb.index_of(h)?, emb.index_of(t)?)))
        .collect()
}

/// Relation vector of one (head, tail) pair: stack, convolve, ReLU, pool,
/// flatten, affine.
fn pair_relation(tape: &mut Tape, b: &Bound, c: &KgcConfig, h: Var, t: Var) -> Var {
    let x = tape.concat_rows(&[h, t]);
    let conv = tape.conv2d(x, b.p("conv.kernel"), c.kernel_h, c.kernel_w);
    let act = tape.relu(conv);
    let pooled = tape.max_pool_cols(act, c.pool);
    let flat = tape.flatten(pooled);
    let lin = tape.matmul(flat, b.p("meta.weight"));
    tape.add_row(lin, b.p("meta.bias"))
}

fn meta_vars(
    tape: &mut Tape,
    b: &Bound,
    c: &KgcConfig,
    rows: &[(usize, usize)],
) -> (Vec<Var>, Var, Var) {
    let mut per_pair = Vec::new();
    let mut offsets = Vec::new();
    for &(h, t) in rows {
        let hv = tape.row(b.table, h);
        let tv = tape.row(b.table, t);
        per_pair.push(pair_relation(tape, b, c, hv, tv));
        offsets.push(tape.sub(tv, hv));
    }
    let stacked = tape.concat_rows(&per_pair);
    let r_s = tape.mean_rows(stacked);
    let stacked = tape.concat_rows(&offsets);
    let r_0 = tape.mean_rows(stacked);
    (per_pair, r_s, r_0)
}

fn encoder_layer(tape: &mut Tape, b: &Bound, c: &KgcConfig, l: usize, x: Var) -> Var {
    let k = |part: &str| b.p(&layer_key(l, part));
    let affine = |tape: &mut Tape, x: Var, w: &str, bias: &str| {
        let m = tape.matmul(x, k(w));
        tape.add_row(m, k(bias))
    };
    let q = affine(tape, x, "attn.q.weight", "attn.q.bias");
    let kk = affine(tape, x, "attn.k.weight", "attn.k.bias");
    let v = affine(tape, x, "attn.v.weight", "attn.v.bias");
    let dh = c.dim / c.heads;
    let mut heads = Vec::with_capacity(c.heads);
    for h in 0..c.heads {
        let qh = tape.cols(q, h * dh, dh);
        let kh = tape.cols(kk, h * dh, dh);
        let vh = tape.cols(v, h * dh, dh);
        let kt = tape.transpose(kh);
        let s = tape.matmul(qh, kt);
        let s = tape.scale(s, 1.0 / (dh as f64).sqrt());
        let p = tape.softmax_rows(s);
        heads.push(tape.matmul(p, vh));
    }
    let cat = tape.concat_cols(&heads);
    let attn = affine(tape, cat, "attn.o.weight", "attn.o.bias");
    let r1 = tape.add(x, attn);
    let n1 = tape.normalize_rows(r1, c.ln_eps);
    let n1 = tape.mul_row(n1, k("ln1.gain"));
    let x1 = tape.add_row(n1, k("ln1.shift"));
    let f = affine(tape, x1, "ffn.in.weight", "ffn.in.bias");
    let f = tape.relu(f);
    let f = affine(tape, f, "ffn.out.weight", "ffn.out.bias");
    let r2 = tape.add(x1, f);
    let n2 = tape.normalize_rows(r2, c.ln_eps);
    let n2 = tape.mul_row(n2, k("ln2.gain"));
    tape.add_row(n2, k("ln2.shift"))
}

/// Runs the encoder on already position-fused head and tail vectors; the
/// relation slot gets its positional vector here.
fn encode_vars(tape: &mut Tape, b: &Bound, c: &KgcConfig, h: Var, r0: Var, t: Var) -> Vec<Var> {
    let r = tape.add(r0, b.p("pos.relation"));
    let mut x = tape.concat_rows(&[h, r, t]);
    let mut outs = Vec::with_capacity(c.layers);
    for l in 0..c.layers {
        x = encoder_layer(tape, b, c, l, x);
        outs.push(x);
    }
    outs
}

fn score_var(tape: &mut Tape, h: Var, r: Var, t: Var) -> Var {
    let s = tape.add(h, r);
    let d = tape.sub(s, t);
    tape.norm(d)
}

/// Distance of one (head, tail) pair under relation vectors `r_s`/`r_0`.
fn pair_score(
    tape: &mut Tape,
    b: &Bound,
    c: &KgcConfig,
    h: usize,
    t: usize,
    r_s: Var,
    r_0: Var,
) -> Var {
    let hv = tape.row(b.table, h);
    let tv = tape.row(b.table, t);
    let hf = tape.add(hv, b.p("pos.head"));
    let tf = tape.add(tv, b.p("pos.tail"));
    let enc = encode_vars(tape, b, c, hf, r_0, tf);
    let last = *enc.last().expect("at least one layer");
    let hh = tape.row(last, 0);
    let tt = tape.row(last, 2);
    score_var(tape, hh, r_s, tt)
}

fn vec_of(tape: &Tape, v: Var) -> Vec<f64> {
    tape.value(v).data.clone()
}

pub fn relation_meta(
    support: &[(String, String)],
    params: &ModelParams,
    emb: &EmbeddingTable,
) -> Result<RelationMeta, KgcError> {
    check_dims(params, emb)?;
    if support.is_empty() {
        return Err(KgcError::InvalidConfig("empty support set".into()));
    }
    let rows = support_rows(emb, support)?;
    let mut tape = Tape::new();
    let b = Bound::new(&mut tape, params, Some(emb));
    let (pp, r_s, r_0) = meta_vars(&mut tape, &b, &params.config, &rows);
    Ok(RelationMeta {
        per_pair: pp.iter().map(|&v| vec_of(&tape, v)).collect(),
        r_s: vec_of(&tape, r_s),
        r_0: vec_of(&tape, r_0),
    })
}

/// Mean of `tail - head` over the support set.
pub fn initial_relation(
    support: &[(String, String)],
    emb: &EmbeddingTable,
) -> Result<Vec<f64>, KgcError> {
    if support.is_empty() {
        return Err(KgcError::InvalidConfig("empty support set".into()));
    }
    let mut out = vec![0.0; emb.dim()];
    for (h, t) in support {
        let (hv, tv) = (emb.get(h)?, emb.get(t)?);
        for ((o, a), b) in out.iter_mut().zip(hv).zip(tv) {
            *o += b - a;
        }
    }
    let n = support.len() as f64;
    out.iter_mut().for_each(|x| *x /= n);
    Ok(out)
}

/// Adds the head and tail positional vectors.
pub fn fuse_position(
    h0: &[f64],
    t0: &[f64],
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>), KgcError> {
    let d = params.config.dim;
    check_len("head", d, h0.len())?;
    check_len("tail", d, t0.len())?;
    let add = |x: &[f64], p: &Tensor| x.iter().zip(&p.data).map(|(a, b)| a + b).collect();
    Ok((
        add(h0, params.get("pos.head")),
        add(t0, params.get("pos.tail")),
    ))
}

pub fn encode_triple(
    h: &[f64],
    r_0: &[f64],
    t: &[f64],
    params: &ModelParams,
) -> Result<EncodedTriple, KgcError> {
    let d = params.config.dim;
    check_len("head", d, h.len())?;
    check_len("relation", d, r_0.len())?;
    check_len("tail", d, t.len())?;
    let mut tape = Tape::new();
    let b = Bound::new(&mut tape, params, None);
    let hv = tape.leaf(Tensor::row_vector(h.to_vec()));
    let rv = tape.leaf(Tensor::row_vector(r_0.to_vec()));
    let tv = tape.leaf(Tensor::row_vector(t.to_vec()));
    let outs = encode_vars(&mut tape, &b, &params.config, hv, rv, tv);
    let layers: Vec<Tensor> = outs.iter().map(|&v| tape.value(v).clone()).collect();
    let last = layers.last().expect("at least one layer");
    if !last.is_finite() {
        return Err(KgcError::NonFinite("encoder output".into()));
    }
    Ok(EncodedTriple {
        head: last.row(0).to_vec(),
        relation: last.row(1).to_vec(),
        tail: last.row(2).to_vec(),
        layers,
    })
}

/// `‖h + r - t‖₂`; lower is more plausible.
pub fn score(h: &[f64], r: &[f64], t: &[f64]) -> Result<f64, KgcError> {
    check_len("relation", h.len(), r.len())?;
    check_len("tail", h.len(), t.len())?;
    Ok(h.iter()
        .zip(r)
        .zip(t)
        .map(|((a, b), c)| (a + b - c) * (a + b - c))
        .sum::<f64>()
        .sqrt())
}

/// `Σ max(0, pos - neg + margin)` over paired scores.
pub fn hinge_sum(pairs: &[(f64, f64)], margin: f64) -> f64 {
    pairs.iter().map(|(p, n)| (p - n + margin).max(0.0)).sum()
}

fn task_graph(
    tape: &mut Tape,
    task: &FewShotTask,
    params: &ModelParams,
    emb: &EmbeddingTable,
) -> Result<(Bound, Var), KgcError> {
    check_dims(params, emb)?;
    task.validate(params.config.support_size)?;
    let c = &params.config;
    let rows = support_rows(emb, &task.support)?;
    let q_rows = support_rows(emb, &task.queries)?;
    let n_rows = support_rows(emb, &task.negatives)?;
    let b = Bound::new(tape, params, Some(emb));
    let (_, r_s, r_0) = meta_vars(tape, &b, c, &rows);
    let mut hinges = Vec::with_capacity(q_rows.len());
    for (&(qh, qt), &(nh, nt)) in q_rows.iter().zip(&n_rows) {
        let pos = pair_score(tape, &b, c, qh, qt, r_s, r_0);
        let neg = pair_score(tape, &b, c, nh, nt, r_s, r_0);
        let diff = tape.sub(pos, neg);
        let shifted = tape.add_scalar(diff, c.margin);
        hinges.push(tape.relu(shifted));
    }
    let loss = if hinges.is_empty() {
        tape.leaf(Tensor::scalar(0.0))
    } else {
        tape.sum(&hinges)
    };
    Ok((b, loss))
}

pub fn task_loss(
    task: &FewShotTask,
    params: &ModelParams,
    emb: &EmbeddingTable,
) -> Result<f64, KgcError> {
    let mut tape = Tape::new();
    let (_, loss) = task_graph(&mut tape, task, params, emb)?;
    Ok(tape.value(loss).data[0])
}

pub fn loss_and_grads(
    task: &FewShotTask,
    params: &ModelParams,
    emb: &EmbeddingTable,
) -> Result<(f64, Gradients), KgcError> {
    let mut tape = Tape::new();
    let (b, loss) = task_graph(&mut tape, task, params, emb)?;
    let grads = tape.backward(loss);
    let take = |v: Var, shape: (usize, usize)| {
        grads[v]
            .clone()
            .unwrap_or_else(|| Tensor::zeros(shape.0, shape.1))
    };
    let params_g = b
        .vars
        .iter()
        .map(|(k, &v)| (k.clone(), take(v, params.get(k).shape())))
        .collect();
    Ok((
        tape.value(loss).data[0],
        Gradients {
            params: params_g,
            embeddings: take(b.table, emb.vectors.shape()),
        },
    ))
}

/// Candidates sorted by ascending score, ties by id.
pub fn rank_tails(
    head: &str,
    support: &[(String, String)],
    candidates: &[String],
    params: &ModelParams,
    emb: &EmbeddingTable,
) -> Result<Vec<(String, f64)>, KgcError> {
    check_dims(params, emb)?;
    let h = emb.index_of(head)?;
    let rows = support_rows(emb, support)?;
    if rows.is_empty() {
        return Err(KgcError::InvalidConfig("empty support set".into()));
    }
    let c = &params.config;
    let mut tape = Tape::new();
    let b = Bound::new(&mut tape, params, Some(emb));
    let (_, r_s, r_0) = meta_vars(&mut tape, &b, c, &rows);
    let mut out = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let t = emb.index_of(cand)?;
        let s = pair_score(&mut tape, &b, c, h, t, r_s, r_0);
        out.push((cand.clone(), tape.value(s).data[0]));
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn small(dim: usize, k: usize, layers: usize) -> (ModelParams, EmbeddingTable) {
        let config = KgcConfig {
            dim,
            support_size: k,
            layers,
            ..KgcConfig::default()
        };
        let mut rng = substream(3, "test");
        let params = ModelParams::init(&config, &mut rng).unwrap();
        let ids: Vec<String> = (0..6).map(|i| format!("e{i}")).collect();
        let emb = EmbeddingTable::random(&ids, dim, &mut rng);
        (params, emb)
    }

    fn pairs(p: &[(&str, &str)]) -> Vec<(String, String)> {
        p.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn score_examples() {
        assert_eq!(
            score(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]).unwrap(),
            2f64.sqrt()
        );
        assert_eq!(score(&[1.0, 2.0], &[0.5, 0.5], &[1.5, 2.5]).unwrap(), 0.0);
        assert!(score(&[1.0], &[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(hinge_sum(&[(0.0, 2.0)], 1.0), 0.0);
        assert_eq!(hinge_sum(&[(0.7, 0.7)], 1.0), 1.0);
        assert!((hinge_sum(&[(1.0, 0.5), (0.2, 1.0)], 1.0) - 1.7).abs() < 1e-15);
    }

    #[test]
    fn initial_relation_examples() {
        let (_, mut emb) = small(4, 1, 1);
        emb.set("e0", &[1.0, 2.0, 3.0, 4.0]).unwrap();
        emb.set("e1", &[1.0, 2.0, 3.0, 4.0]).unwrap();
        emb.set("e2", &[2.0, 2.0, 2.0, 2.0]).unwrap();
        emb.set("e3", &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            initial_relation(&pairs(&[("e0", "e1")]), &emb).unwrap(),
            vec![0.0; 4]
        );
        assert_eq!(
            initial_relation(&pairs(&[("e0", "e2")]), &emb).unwrap(),
            vec![1.0, 0.0, -1.0, -2.0]
        );
        assert_eq!(
            initial_relation(&pairs(&[("e0", "e2"), ("e2", "e3")]), &emb).unwrap(),
            vec![-0.5, -1.0, -1.0, -1.5]
        );
        assert!(matches!(
            initial_relation(&pairs(&[("e0", "zz")]), &emb),
            Err(KgcError::UnknownEntity(_))
        ));
    }

    #[test]
    fn single_support_meta_is_its_pair() {
        let (params, emb) = small(8, 1, 1);
        let m = relation_meta(&pairs(&[("e0", "e1")]), &params, &emb).unwrap();
        assert_eq!(m.per_pair.len(), 1);
        assert_eq!(m.r_s, m.per_pair[0]);
    }

    #[test]
    fn fuse_position_adds() {
        let (mut params, _) = small(4, 1, 1);
        *params.get_mut("pos.head") = Tensor::zeros(1, 4);
        let h0 = [0.1, 0.2, 0.3, 0.4];
        let (h, t) = fuse_position(&h0, &[0.0; 4], &params).unwrap();
        assert_eq!(h, h0.to_vec());
        assert_eq!(t, params.get("pos.tail").data);
        assert!(fuse_position(&[0.0; 3], &[0.0; 4], &params).is_err());
    }

    #[test]
    fn rank_single_candidate_and_ties() {
        let (params, mut emb) = small(4, 1, 1);
        let s = pairs(&[("e0", "e1")]);
        let r = rank_tails("e2", &s, &["e3".into()], &params, &emb).unwrap();
        assert_eq!(r.len(), 1);
        let v = emb.get("e4").unwrap().to_vec();
        emb.set("e5", &v).unwrap();
        let r = rank_tails("e2", &s, &["e5".into(), "e4".into()], &params, &emb).unwrap();
        assert_eq!(r[0].0, "e4");
        assert_eq!(r[0].1, r[1].1);
    }

    #[test]
    fn unpaired_negatives_error() {
        let (params, emb) = small(4, 1, 1);
        let task = FewShotTask {
            relation: "r".into(),
            support: pairs(&[("e0", "e1")]),
            queries: pairs(&[("e1", "e2"), ("e2", "e3")]),
            negatives: pairs(&[("e1", "e4")]),
        };
        assert!(matches!(
            task_loss(&task, &params, &emb),
            Err(KgcError::UnpairedNegatives { .. })
        ));
    }
}
