//! The adversarial channel game: attack strategies, single rounds, and the
//! fooling / ⊥ / limiting statistics over many rounds.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;

use crate::bits::{random_bits, BitStr, Bits};
use crate::codeword::{Layout, Region};
use crate::error::{param, Error, Result};
use crate::hashing::label_node;
use crate::inner_ecc::Ecc;
use crate::oracles::{oracle_green_set, oracle_strong_colors};
use crate::query::{QueryLog, Verdict};
use crate::strong_crlcc::StrongCode;
use crate::weak_crlcc::WeakCode;

/// One decoder call against a received word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Query {
    pub index: usize,
    pub message: bool,
    pub rng_seed: u64,
}

/// What the channel needs from a code.
pub trait ChannelCode: Sync {
    fn kind(&self) -> &'static str;
    fn message_bits(&self) -> usize;
    fn layout(&self) -> Layout;
    fn block_ecc(&self, j: usize) -> &Ecc;
    /// The budget the analysis assumes, in bits.
    fn budget(&self) -> usize;
    fn encode_bits(&self, x: &BitStr) -> Result<Bits>;
    /// Runs every query against one shared view of `w`.
    fn decode_all(&self, w: &BitStr, queries: &[Query]) -> Result<Vec<(Verdict, QueryLog)>>;
    /// Oracle fraction of red nodes (weak) or red meta-nodes (strong).
    fn red_fraction(&self, w: &BitStr) -> Result<f64>;
    /// Label blocks in the order a flooding adversary kills them.
    fn flood_order(&self) -> Vec<usize>;
    /// A hash-consistent forgery of the last unit: replacement contents for
    /// its message block and label block.
    fn forge(&self, x: &BitStr, rng: &mut dyn RngCore) -> Result<Vec<(usize, Bits)>>;
}

fn run_queries<F>(queries: &[Query], f: F) -> Result<Vec<(Verdict, QueryLog)>>
where
    F: Fn(&Query, &mut ChaCha8Rng, &mut QueryLog) -> Result<Verdict> + Sync,
{
    queries
        .par_iter()
        .map(|q| {
            let mut rng = ChaCha8Rng::seed_from_u64(q.rng_seed);
            let mut log = QueryLog::new();
            let v = f(q, &mut rng, &mut log)?;
            Ok((v, log))
        })
        .collect()
}

impl ChannelCode for WeakCode {
    fn kind(&self) -> &'static str {
        "weak"
    }

    fn message_bits(&self) -> usize {
        self.params().k
    }

    fn layout(&self) -> Layout {
        WeakCode::layout(self)
    }

    fn block_ecc(&self, _j: usize) -> &Ecc {
        self.ecc()
    }

    fn budget(&self) -> usize {
        WeakCode::budget(self)
    }

    fn encode_bits(&self, x: &BitStr) -> Result<Bits> {
        Ok(self.encode(x)?.bits)
    }

    fn decode_all(&self, w: &BitStr, queries: &[Query]) -> Result<Vec<(Verdict, QueryLog)>> {
        let word = self.received(w)?;
        run_queries(queries, |q, rng, log| {
            if q.message {
                word.decode_message(q.index, rng, log)
            } else {
                word.decode(q.index, rng, log)
            }
        })
    }

    fn red_fraction(&self, w: &BitStr) -> Result<f64> {
        let red = oracle_green_set(self, w)?;
        Ok(red.iter().filter(|&&r| r).count() as f64 / red.len() as f64)
    }

    fn flood_order(&self) -> Vec<usize> {
        let kp = self.params().k_prime;
        let g = self.graph();
        let mut nodes: Vec<usize> = (1..=kp).collect();
        nodes.sort_by_key(|&v| (std::cmp::Reverse(g.children_of(v).len()), v));
        nodes.into_iter().map(|v| kp + v).collect()
    }

    fn forge(&self, x: &BitStr, rng: &mut dyn RngCore) -> Result<Vec<(usize, Bits)>> {
        let p = self.params();
        let honest = self.encode(x)?;
        let v = p.k_prime;
        let mut xv = x[(v - 1) * p.ell..v * p.ell].to_bitvec();
        let flip = rng.gen_range(0..p.ell);
        let b = xv[flip];
        xv.set(flip, !b);
        let parents = self.graph().parents_of(v).iter().map(|&u| honest.labels[u as usize - 1].bits());
        let label = label_node(self.seed(), p.ell, &xv, parents);
        Ok(vec![(v, self.ecc().encode(&xv)?), (p.k_prime + v, self.ecc().encode(label.bits())?)])
    }
}

impl ChannelCode for StrongCode {
    fn kind(&self) -> &'static str {
        "strong"
    }

    fn message_bits(&self) -> usize {
        self.params().k
    }

    fn layout(&self) -> Layout {
        StrongCode::layout(self)
    }

    fn block_ecc(&self, j: usize) -> &Ecc {
        self.ecc_for(j)
    }

    fn budget(&self) -> usize {
        StrongCode::budget(self)
    }

    fn encode_bits(&self, x: &BitStr) -> Result<Bits> {
        Ok(self.encode(x)?.bits)
    }

    fn decode_all(&self, w: &BitStr, queries: &[Query]) -> Result<Vec<(Verdict, QueryLog)>> {
        let word = self.received(w)?;
        run_queries(queries, |q, rng, log| {
            if q.message {
                word.decode_message(q.index, rng, log)
            } else {
                word.decode(q.index, rng, log)
            }
        })
    }

    fn red_fraction(&self, w: &BitStr) -> Result<f64> {
        let colors = oracle_strong_colors(self, w)?;
        Ok(colors.red_meta_count() as f64 / self.params().t as f64)
    }

    fn flood_order(&self) -> Vec<usize> {
        let t = self.params().t;
        let g = self.graph().meta();
        let mut nodes: Vec<usize> = (1..=t).collect();
        nodes.sort_by_key(|&u| (std::cmp::Reverse(g.children_of(u).len()), u));
        nodes.into_iter().map(|u| t + u).collect()
    }

    fn forge(&self, x: &BitStr, rng: &mut dyn RngCore) -> Result<Vec<(usize, Bits)>> {
        let p = self.params();
        let g = self.graph();
        let honest = self.encode(x)?;
        let group = p.beta * p.m * p.ell;
        let chunk = p.beta * p.ell;
        let t = p.t;
        let mut tt = x[(t - 1) * group..t * group].to_bitvec();
        let flip = rng.gen_range(0..group);
        let b = tt[flip];
        tt.set(flip, !b);
        let mut labels: Vec<Bits> = honest.labels.iter().map(|l| l.bits().to_bitvec()).collect();
        for j in 1..=p.m {
            let node = g.node(t, j);
            let parents: Vec<Bits> = g.parents_of(node).iter().map(|&q| labels[q as usize - 1].clone()).collect();
            let l = label_node(self.seed(), p.ell, &tt[(j - 1) * chunk..j * chunk], parents.iter().map(|b| b.as_bitslice()));
            labels[node - 1] = l.bits().to_bitvec();
        }
        let mut u = Bits::with_capacity(p.m * p.ell);
        for j in 1..=p.m {
            u.extend_from_bitslice(&labels[g.node(t, j) - 1]);
        }
        Ok(vec![(t, self.message_ecc().encode(&tt)?), (2 * t, self.label_ecc().encode(&u)?)])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Attack {
    None,
    RandomFlip,
    /// Kill this many blocks of the message and label regions (0: as many
    /// as the budget allows).
    BlockKiller { blocks: usize },
    /// Tamper up to this fraction of the repetition blocks toward one forged
    /// label block.
    TailAttack { fraction: f64 },
    RedFlood,
    LabelSwap,
}

impl Attack {
    pub fn name(&self) -> &'static str {
        match self {
            Attack::None => "none",
            Attack::RandomFlip => "random_flip",
            Attack::BlockKiller { .. } => "block_killer",
            Attack::TailAttack { .. } => "tail_attack",
            Attack::RedFlood => "red_flood",
            Attack::LabelSwap => "label_swap",
        }
    }

    pub fn parse(s: &str) -> Result<Attack> {
        Ok(match s {
            "none" => Attack::None,
            "random_flip" => Attack::RandomFlip,
            "block_killer" => Attack::BlockKiller { blocks: 0 },
            "tail_attack" => Attack::TailAttack { fraction: 0.4 },
            "red_flood" => Attack::RedFlood,
            "label_swap" => Attack::LabelSwap,
            other => return param(format!("unknown attack {other}")),
        })
    }

    pub fn all() -> Vec<Attack> {
        vec![
            Attack::RandomFlip,
            Attack::BlockKiller { blocks: 0 },
            Attack::TailAttack { fraction: 0.4 },
            Attack::RedFlood,
            Attack::LabelSwap,
        ]
    }

    /// Corrupts `c` within `budget` flips and picks a challenge index.
    pub fn run(&self, code: &dyn ChannelCode, x: &BitStr, c: &BitStr, budget: usize, rng: &mut dyn RngCore) -> Result<Corruption> {
        let layout = code.layout();
        let n = layout.len();
        let mut plan = Plan { flips: Vec::new(), budget };
        let mut focus: Vec<usize> = Vec::new();
        match self {
            Attack::None => {}
            Attack::RandomFlip => {
                plan.flips = sample(rng, n, budget.min(n)).into_iter().map(|p| p + 1).collect();
                focus = plan.flips.clone();
            }
            Attack::BlockKiller { blocks } => {
                let region = 2 * layout.units;
                let limit = if *blocks == 0 { region } else { (*blocks).min(region) };
                for j in sample(rng, region, limit).into_iter().map(|j| j + 1) {
                    if plan.kill(code, j, rng) {
                        focus.extend(layout.range(j).map(|p| p + 1));
                    } else {
                        break;
                    }
                }
            }
            Attack::TailAttack { fraction } => {
                let u = layout.units;
                let ecc = code.block_ecc(2 * u);
                let forged = ecc.encode(&random_bits(rng, ecc.message_bits()))?;
                let count = ((fraction * (u + 1) as f64).ceil() as usize).min(u + 1);
                for j in sample(rng, u + 1, count).into_iter().map(|j| 2 * u + j) {
                    if plan.tamper(code, c, j, &forged) || plan.kill(code, j, rng) {
                        focus.extend(layout.range(j).map(|p| p + 1).filter(|&p| forged[p - 1 - layout.range(j).start] != c[p - 1]));
                    } else {
                        break;
                    }
                }
            }
            Attack::RedFlood => {
                for j in code.flood_order() {
                    if !plan.kill(code, j, rng) {
                        break;
                    }
                }
                let region = layout.range(2 * layout.units).end;
                focus = vec![rng.gen_range(1..=region)];
            }
            Attack::LabelSwap => {
                for (j, target) in code.forge(x, rng)? {
                    let r = layout.range(j);
                    let differs: Vec<usize> = r.clone().filter(|&p| target[p - r.start] != c[p]).map(|p| p + 1).collect();
                    if plan.tamper(code, c, j, &target) {
                        focus.extend(differs);
                    }
                }
            }
        }
        plan.flips.sort_unstable();
        plan.flips.dedup();
        if plan.flips.len() > budget {
            return Err(Error::Budget { used: plan.flips.len(), budget });
        }
        let challenge = if focus.is_empty() { rng.gen_range(1..=n) } else { focus[rng.gen_range(0..focus.len())] };
        Ok(Corruption { mask: plan.flips, challenge })
    }
}

struct Plan {
    flips: Vec<usize>,
    budget: usize,
}

impl Plan {
    fn room(&self) -> usize {
        self.budget - self.flips.len()
    }

    /// Flips a minimum-cost decoder-defeating pattern into block j.
    fn kill(&mut self, code: &dyn ChannelCode, j: usize, rng: &mut dyn RngCore) -> bool {
        let pattern = code.block_ecc(j).kill_pattern(rng);
        if pattern.len() > self.room() {
            return false;
        }
        let start = code.layout().range(j).start;
        self.flips.extend(pattern.into_iter().map(|p| start + p + 1));
        true
    }

    /// Moves block j to within the decoding radius of `target`.
    fn tamper(&mut self, code: &dyn ChannelCode, c: &BitStr, j: usize, target: &BitStr) -> bool {
        let r = code.layout().range(j);
        let radius = code.block_ecc(j).radius_bits();
        let differs: Vec<usize> = r.clone().filter(|&p| target[p - r.start] != c[p]).collect();
        let need = differs.len().saturating_sub(radius);
        if need > self.room() || need == 0 {
            return false;
        }
        self.flips.extend(differs[..need].iter().map(|p| p + 1));
        true
    }
}

/// An attack's output: sorted 1-based flip positions and a challenge index.
#[derive(Clone, Debug, PartialEq)]
pub struct Corruption {
    pub mask: Vec<usize>,
    pub challenge: usize,
}

impl Corruption {
    pub fn apply(&self, c: &BitStr) -> Bits {
        let mut w = c.to_bitvec();
        for &p in &self.mask {
            let b = w[p - 1];
            w.set(p - 1, !b);
        }
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Correct,
    Bottom,
    Wrong,
}

impl Outcome {
    pub fn of(v: Verdict, truth: bool) -> Outcome {
        match v {
            Verdict::Bottom => Outcome::Bottom,
            Verdict::Bit(b) if b == truth => Outcome::Correct,
            Verdict::Bit(_) => Outcome::Wrong,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Correct => "correct",
            Outcome::Bottom => "bottom",
            Outcome::Wrong => "wrong",
        }
    }
}

/// One round of the game.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRun {
    pub strategy: String,
    pub budget: usize,
    pub used: usize,
    pub index: usize,
    pub message_mode: bool,
    pub verdict: Verdict,
    pub truth: bool,
    pub queries: u64,
    pub distinct: u64,
    pub red_fraction: Option<f64>,
    /// Full mask, kept only for fooling events so they can be replayed.
    pub transcript: Option<Vec<usize>>,
}

impl ChannelRun {
    pub fn outcome(&self) -> Outcome {
        Outcome::of(self.verdict, self.truth)
    }

    /// Tab-separated record: strategy, budget, used, index, mode, verdict,
    /// truth, outcome, queries, distinct.
    pub fn line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.strategy,
            self.budget,
            self.used,
            self.index,
            if self.message_mode { "message" } else { "codeword" },
            self.verdict,
            self.truth as u8,
            self.outcome().name(),
            self.queries,
            self.distinct
        )
    }
}

pub const RECORD_HEADER: &str = "strategy\tbudget\tused\tindex\tmode\tverdict\ttruth\toutcome\tqueries\tdistinct";

#[derive(Clone, Debug)]
pub struct RoundConfig {
    pub budget: usize,
    pub rounds: usize,
    pub master_seed: u64,
    pub message_mode: bool,
    /// Compute the oracle red fraction per round (slow for strong codes).
    pub red_oracle: bool,
}

/// Runs `rounds` independent rounds. Messages alternate between a random
/// one and the all-zero one; each round derives its own RNG stream from the
/// master seed.
pub fn run_rounds(code: &dyn ChannelCode, attack: &Attack, cfg: &RoundConfig) -> Result<Vec<ChannelRun>> {
    let k = code.message_bits();
    let mut msg_rng = ChaCha8Rng::seed_from_u64(cfg.master_seed ^ 0x5eed_a11c);
    let messages = [random_bits(&mut msg_rng, k), Bits::repeat(false, k)];
    let codewords: Vec<Bits> = messages.iter().map(|x| code.encode_bits(x)).collect::<Result<_>>()?;
    (0..cfg.rounds)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed.wrapping_add(r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let (x, c) = (&messages[r % 2], &codewords[r % 2]);
            run_round_with(code, attack, cfg, x, c, &mut rng)
        })
        .collect()
}

/// One round against a fixed message and codeword.
pub fn run_round_with(
    code: &dyn ChannelCode,
    attack: &Attack,
    cfg: &RoundConfig,
    x: &BitStr,
    c: &BitStr,
    rng: &mut ChaCha8Rng,
) -> Result<ChannelRun> {
    let corruption = attack.run(code, x, c, cfg.budget, rng)?;
    let w = corruption.apply(c);
    let (index, truth) = if cfg.message_mode {
        let i = message_challenge(code, corruption.challenge, rng);
        (i, x[i - 1])
    } else {
        (corruption.challenge, c[corruption.challenge - 1])
    };
    let q = Query { index, message: cfg.message_mode, rng_seed: rng.gen() };
    let (verdict, log) = code.decode_all(&w, &[q])?.pop().expect("one query");
    let red_fraction = if cfg.red_oracle { Some(code.red_fraction(&w)?) } else { None };
    let outcome = Outcome::of(verdict, truth);
    Ok(ChannelRun {
        strategy: attack.name().to_string(),
        budget: cfg.budget,
        used: corruption.mask.len(),
        index,
        message_mode: cfg.message_mode,
        verdict,
        truth,
        queries: log.issued,
        distinct: log.distinct,
        red_fraction,
        transcript: (outcome == Outcome::Wrong).then(|| corruption.mask.clone()),
    })
}

/// Maps a codeword challenge to a message bit of the same unit.
fn message_challenge(code: &dyn ChannelCode, i: usize, rng: &mut ChaCha8Rng) -> usize {
    let l = code.layout();
    let j = l.block_of(i);
    let unit = match l.region(j) {
        Region::Message => j,
        Region::Label => j - l.units,
        Region::Repetition => l.units,
    };
    let per = code.message_bits() / l.units;
    (unit - 1) * per + rng.gen_range(1..=per)
}

/// Two-sided 95% Clopper-Pearson interval upper bound for `x` successes in
/// `n` trials.
pub fn clopper_pearson_upper(x: usize, n: usize) -> f64 {
    if n == 0 || x >= n {
        return 1.0;
    }
    // statrs' own inverse is only accurate to ~1e-5; bisect the CDF instead.
    let (a, b) = ((x + 1) as f64, (n - x) as f64);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < 0.975 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stats {
    pub strategy: String,
    pub rounds: usize,
    pub correct: usize,
    pub bottom: usize,
    pub wrong: usize,
    pub fool_upper95: f64,
    pub mean_queries: f64,
    pub max_queries: u64,
    pub mean_used: f64,
    pub mean_red_fraction: Option<f64>,
}

impl Stats {
    pub fn of(runs: &[ChannelRun]) -> Stats {
        let count = |o: Outcome| runs.iter().filter(|r| r.outcome() == o).count();
        let n = runs.len();
        let mean = |f: &dyn Fn(&ChannelRun) -> f64| if n == 0 { 0.0 } else { runs.iter().map(f).sum::<f64>() / n as f64 };
        let reds: Vec<f64> = runs.iter().filter_map(|r| r.red_fraction).collect();
        Stats {
            strategy: runs.first().map(|r| r.strategy.clone()).unwrap_or_default(),
            rounds: n,
            correct: count(Outcome::Correct),
            bottom: count(Outcome::Bottom),
            wrong: count(Outcome::Wrong),
            fool_upper95: clopper_pearson_upper(count(Outcome::Wrong), n),
            mean_queries: mean(&|r| r.queries as f64),
            max_queries: runs.iter().map(|r| r.queries).max().unwrap_or(0),
            mean_used: mean(&|r| r.used as f64),
            mean_red_fraction: (!reds.is_empty()).then(|| reds.iter().sum::<f64>() / reds.len() as f64),
        }
    }

    pub fn fool_rate(&self) -> f64 {
        self.wrong as f64 / self.rounds.max(1) as f64
    }

    pub fn bottom_rate(&self) -> f64 {
        self.bottom as f64 / self.rounds.max(1) as f64
    }

    pub fn correct_rate(&self) -> f64 {
        self.correct as f64 / self.rounds.max(1) as f64
    }
}

/// Aggregate table, one row per strategy, whitespace-aligned.
pub fn table(stats: &[Stats]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>7} {:>9} {:>9} {:>9} {:>10} {:>12} {:>12} {:>9} {:>8}",
        "strategy", "rounds", "correct", "bottom", "wrong", "fool_ub95", "mean_q", "max_q", "used", "red"
    );
    for s in stats {
        let red = s.mean_red_fraction.map_or("-".to_string(), |r| format!("{r:.3}"));
        let _ = writeln!(
            out,
            "{:<14} {:>7} {:>9.4} {:>9.4} {:>9.4} {:>10.5} {:>12.0} {:>12} {:>9.1} {:>8}",
            s.strategy,
            s.rounds,
            s.correct_rate(),
            s.bottom_rate(),
            s.fool_rate(),
            s.fool_upper95,
            s.mean_queries,
            s.max_queries,
            s.mean_used,
            red
        );
    }
    out
}

/// Limiting statistic per block: a block is good when its representative
/// bit decodes correctly in at least 2/3 of `reps` independent calls.
/// Returns one flag per block.
pub fn good_blocks(code: &dyn ChannelCode, c: &BitStr, w: &BitStr, blocks: &[usize], reps: usize, seed: u64) -> Result<Vec<bool>> {
    let layout = code.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = Vec::with_capacity(blocks.len() * reps);
    for &j in blocks {
        let r = layout.range(j);
        let i = rng.gen_range(r.start + 1..=r.end);
        for _ in 0..reps {
            queries.push(Query { index: i, message: false, rng_seed: rng.gen() });
        }
    }
    let answers = code.decode_all(w, &queries)?;
    Ok(queries
        .chunks(reps)
        .zip(answers.chunks(reps))
        .map(|(qs, ans)| {
            let truth = c[qs[0].index - 1];
            let ok = ans.iter().filter(|(v, _)| *v == Verdict::Bit(truth)).count();
            3 * ok >= 2 * reps
        })
        .collect())
}

/// |Good|/n over all blocks, weighting each block by its length.
pub fn good_fraction(code: &dyn ChannelCode, c: &BitStr, w: &BitStr, reps: usize, seed: u64) -> Result<f64> {
    let layout = code.layout();
    let blocks: Vec<usize> = (1..=layout.block_count()).collect();
    let good = good_blocks(code, c, w, &blocks, reps, seed)?;
    let bits: usize = blocks.iter().zip(&good).filter(|(_, &g)| g).map(|(&j, _)| layout.block_len(j)).sum();
    Ok(bits as f64 / layout.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::gen_seeded;
    use crate::weak_crlcc::WeakConfig;

    fn weak() -> WeakCode {
        let cfg = WeakConfig { k_prime: 16, ell: 128, delta: 0.25, ..WeakConfig::default() };
        WeakCode::new(&cfg, gen_seeded(128, 2).unwrap()).unwrap()
    }

    #[test]
    fn zero_budget_is_always_correct() {
        let code = weak();
        let cfg = RoundConfig { budget: 0, rounds: 40, master_seed: 1, message_mode: false, red_oracle: false };
        for attack in Attack::all() {
            let stats = Stats::of(&run_rounds(&code, &attack, &cfg).unwrap());
            assert_eq!((stats.correct, stats.wrong), (40, 0), "{}", attack.name());
        }
    }

    #[test]
    fn attacks_respect_budget_and_never_fool() {
        let code = weak();
        let budget = ChannelCode::budget(&code);
        assert!(budget > 0);
        for message_mode in [false, true] {
            let cfg = RoundConfig { budget, rounds: 30, master_seed: 2, message_mode, red_oracle: true };
            for attack in Attack::all() {
                let runs = run_rounds(&code, &attack, &cfg).unwrap();
                assert!(runs.iter().all(|r| r.used <= budget));
                let stats = Stats::of(&runs);
                assert_eq!(stats.wrong, 0, "{}", attack.name());
            }
        }
    }

    #[test]
    fn red_flood_reddens_weak_graph() {
        let code = weak();
        let cfg = RoundConfig { budget: 400, rounds: 3, master_seed: 3, message_mode: false, red_oracle: true };
        let runs = run_rounds(&code, &Attack::RedFlood, &cfg).unwrap();
        for r in &runs {
            assert!(r.red_fraction.unwrap() > 0.9, "{:?}", r.red_fraction);
            assert_ne!(r.outcome(), Outcome::Wrong);
        }
    }

    #[test]
    fn clopper_pearson_reference_values() {
        // 1 - 0.025^(1/n) for zero successes
        let got = clopper_pearson_upper(0, 1000);
        assert!((got - (1.0 - 0.025f64.powf(1e-3))).abs() < 1e-9, "{got}");
        assert!(clopper_pearson_upper(0, 1000) < 0.005);
        assert_eq!(clopper_pearson_upper(5, 5), 1.0);
        let mid = clopper_pearson_upper(50, 100);
        assert!(mid > 0.59 && mid < 0.61, "{mid}");
    }

    #[test]
    fn honest_blocks_are_all_good() {
        let code = weak();
        let x = random_bits(&mut ChaCha8Rng::seed_from_u64(4), code.params().k);
        let c = code.encode(&x).unwrap().bits;
        assert_eq!(good_fraction(&code, &c, &c, 3, 5).unwrap(), 1.0);
    }

    #[test]
    fn parse_names_round_trip() {
        for a in Attack::all() {
            assert_eq!(Attack::parse(a.name()).unwrap().name(), a.name());
        }
        assert!(Attack::parse("bogus").is_err());
    }
}
