//! `crlcc` command-line front end.
//!
//! Exit codes: 0 ok, 1 verification failed, 2 usage, 3 malformed input,
//! 4 refusal (budget overflow, oracle size guard).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use crlcc::bits::{from_bytes, Bits};
use crlcc::channel::{run_rounds, table, Attack, ChannelCode, RoundConfig, Stats, RECORD_HEADER};
use crlcc::expander_graph::build_local_expander;
use crlcc::hashing::gen_seeded;
use crlcc::inner_ecc::Rate;
use crlcc::oracles::verify_local_expansion;
use crlcc::query::QueryLog;
use crlcc::strong_crlcc::{self, StrongCode, StrongConfig, StrongHeader};
use crlcc::weak_crlcc::{self, WeakCode, WeakConfig, WeakHeader};
use crlcc::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "crlcc", version, about = "Relaxed locally correctable codes against bounded channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Weak,
    Strong,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a message file. The message is zero-padded to the code's k.
    Encode {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        ell: usize,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        beta: usize,
        #[arg(long, default_value = "1/4")]
        rate: String,
        #[arg(long)]
        kappa: Option<u32>,
        /// Weak: α (default 1/2). Strong: α (default δ/(10 d_δ)).
        #[arg(long)]
        alpha: Option<f64>,
        /// Strong only: meta-node count (default: smallest power of two that fits).
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 1)]
        graph_seed: u64,
        /// Seed for the hash key.
        #[arg(long)]
        seed: u64,
    },
    /// Corrupt a codeword file; writes the mask to `<out>.mask`.
    Corrupt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        attack: String,
        /// Budget as a fraction of n.
        #[arg(long)]
        budget_frac: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        attack_seed: u64,
        /// Allow budgets above the one the analysis assumes.
        #[arg(long)]
        out_of_theorem: bool,
    },
    /// Locally decode one bit (1-based index).
    Query {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        index: usize,
        #[arg(long)]
        message_bit: bool,
        #[arg(long, default_value_t = 0)]
        rng: u64,
    },
    /// Run channel rounds described by a TOML file and print the table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exhaustively check local expansion of a freshly built graph.
    VerifyGraph {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        max_r: usize,
        /// Also write the graph in the CDAG format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Loaded {
    Weak(WeakCode),
    Strong(StrongCode),
}

impl Loaded {
    fn code(&self) -> &dyn ChannelCode {
        match self {
            Loaded::Weak(c) => c,
            Loaded::Strong(c) => c,
        }
    }

    fn file(&self, bits: &Bits) -> Vec<u8> {
        match self {
            Loaded::Weak(c) => weak_crlcc::write_file(&WeakHeader::of(c), bits),
            Loaded::Strong(c) => strong_crlcc::write_file(&StrongHeader::of(c), bits),
        }
    }
}

fn load(path: &Path) -> anyhow::Result<(Loaded, Bits)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    match bytes.get(..4) {
        Some(b"CRW1") => {
            let (h, bits) = weak_crlcc::read_file(&bytes)?;
            Ok((Loaded::Weak(WeakCode::new(&h.config()?, h.seed())?), bits))
        }
        Some(b"CRS1") => {
            let (h, bits) = strong_crlcc::read_file(&bytes)?;
            Ok((Loaded::Strong(h.code()?), bits))
        }
        _ => Err(Error::Format(format!("{}: unknown magic", path.display())).into()),
    }
}

fn mask_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".mask");
    PathBuf::from(s)
}

fn read_mask(path: &Path) -> anyhow::Result<Option<Vec<u64>>> {
    let p = mask_path(path);
    if !p.exists() {
        return Ok(None);
    }
    let bytes = std::fs::read(&p)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Format(format!("{}: length not a multiple of 8", p.display())).into());
    }
    Ok(Some(bytes.chunks(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect()))
}

/// Best-effort message: each message block's ECCD, or its systematic prefix
/// when decoding fails.
fn recover_message(code: &dyn ChannelCode, c: &Bits) -> Bits {
    let layout = code.layout();
    let mut x = Bits::with_capacity(code.message_bits());
    for j in 1..=layout.units {
        let block = &c[layout.range(j)];
        let ecc = code.block_ecc(j);
        match ecc.decode(block) {
            Ok(Some(m)) => x.extend_from_bitslice(&m),
            _ => x.extend_from_bitslice(&block[..ecc.message_bits()]),
        }
    }
    x
}

fn strong_for(msg_bits: usize, cfg: StrongConfig, seed: u64, fixed_t: Option<usize>) -> anyhow::Result<StrongCode> {
    let mut t = fixed_t.unwrap_or(2);
    loop {
        let code = StrongCode::new(&StrongConfig { t, ..cfg.clone() }, gen_seeded(128, seed)?)?;
        if fixed_t.is_some() || code.params().k >= msg_bits {
            if code.params().k < msg_bits {
                bail!(Error::Param(format!("message of {msg_bits} bits exceeds k = {}", code.params().k)));
            }
            return Ok(code);
        }
        t *= 2;
    }
}

fn encode(args: Command) -> anyhow::Result<()> {
    let Command::Encode { mode, input, out, ell, delta, beta, rate, kappa, alpha, t, graph_seed, seed } = args else {
        unreachable!()
    };
    let bytes = std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
    let msg = from_bytes(&bytes, bytes.len() * 8);
    let loaded = match mode {
        Mode::Weak => {
            let k_prime = msg.len().div_ceil(ell).max(2);
            let mut cfg = WeakConfig { k_prime, ell, delta, graph_seed, ..WeakConfig::default() };
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            Loaded::Weak(WeakCode::new(&cfg, gen_seeded(128, seed)?)?)
        }
        Mode::Strong => {
            let rate: Rate = rate.parse().map_err(|_| Error::Param(format!("bad rate {rate}")))?;
            let cfg = StrongConfig { t: 2, ell, beta, rate, delta, alpha, kappa, graph_seed, ..StrongConfig::default() };
            Loaded::Strong(strong_for(msg.len(), cfg, seed, t)?)
        }
    };
    let code = loaded.code();
    let mut x = msg;
    x.resize(code.message_bits(), false);
    let c = code.encode_bits(&x)?;
    std::fs::write(&out, loaded.file(&c))?;
    println!("{} code: k={} n={} budget={} bits", code.kind(), code.message_bits(), c.len(), code.budget());
    Ok(())
}

fn corrupt(args: Command) -> anyhow::Result<()> {
    let Command::Corrupt { input, attack, budget_frac, out, attack_seed, out_of_theorem } = args else { unreachable!() };
    let attack = Attack::parse(&attack)?;
    let (loaded, c) = load(&input)?;
    let code = loaded.code();
    if !(0.0..=1.0).contains(&budget_frac) {
        bail!(Error::Param(format!("budget fraction {budget_frac} outside [0, 1]")));
    }
    let budget = (budget_frac * c.len() as f64).floor() as usize;
    if budget > code.budget() && !out_of_theorem {
        eprintln!("pass --out-of-theorem to exceed the assumed budget");
        bail!(Error::Budget { used: budget, budget: code.budget() });
    }
    let x = recover_message(code, &c);
    let mut rng = ChaCha8Rng::seed_from_u64(attack_seed);
    let corruption = attack.run(code, &x, &c, budget, &mut rng)?;
    let w = corruption.apply(&c);
    std::fs::write(&out, loaded.file(&w))?;
    let mask: Vec<u8> = corruption.mask.iter().flat_map(|&p| (p as u64).to_le_bytes()).collect();
    std::fs::write(mask_path(&out), mask)?;
    println!("{} flipped {} of {budget} bits; suggested challenge {}", attack.name(), corruption.mask.len(), corruption.challenge);
    Ok(())
}

fn query(args: Command) -> anyhow::Result<()> {
    let Command::Query { input, index, message_bit, rng } = args else { unreachable!() };
    let (loaded, w) = load(&input)?;
    let code = loaded.code();
    let limit = if message_bit { code.message_bits() } else { w.len() };
    if index == 0 || index > limit {
        bail!(Error::Param(format!("index {index} outside [1, {limit}]")));
    }
    let q = crlcc::channel::Query { index, message: message_bit, rng_seed: rng };
    let (verdict, log): (_, QueryLog) = code.decode_all(&w, &[q])?.pop().expect("one answer");
    println!("verdict: {verdict}");
    if let Some(mask) = read_mask(&input)? {
        let mut c = w.clone();
        for p in mask {
            let p = p as usize;
            if p == 0 || p > c.len() {
                bail!(Error::Format(format!("mask position {p} outside codeword")));
            }
            let b = c[p - 1];
            c.set(p - 1, !b);
        }
        let truth = if message_bit { recover_message(code, &c)[index - 1] } else { c[index - 1] };
        println!("truth: {}", truth as u8);
    }
    println!("queries: {} bits issued, {} distinct", log.issued, log.distinct);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    mode: Mode,
    #[serde(default = "default_ell")]
    ell: usize,
    #[serde(default = "default_delta")]
    delta: f64,
    /// Weak node count.
    k_prime: Option<usize>,
    /// Strong meta-node count.
    t: Option<usize>,
    #[serde(default = "one")]
    beta: usize,
    rate: Option<String>,
    kappa: Option<u32>,
    alpha: Option<f64>,
    epsilon: Option<f64>,
    #[serde(default = "one_u64")]
    graph_seed: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_rounds")]
    rounds: usize,
    /// Defaults to the assumed budget.
    budget_frac: Option<f64>,
    #[serde(default)]
    out_of_theorem: bool,
    attacks: Option<Vec<String>>,
    #[serde(default)]
    message_mode: bool,
    #[serde(default)]
    red_oracle: bool,
    /// Per-round records are written here when set.
    records: Option<PathBuf>,
}

fn default_ell() -> usize {
    128
}
fn default_delta() -> f64 {
    0.01
}
fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}
fn default_rounds() -> usize {
    100
}

fn sweep(args: Command) -> anyhow::Result<()> {
    let Command::Sweep { config } = args else { unreachable!() };
    let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
    let cfg: SweepConfig = toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", config.display())))?;
    let loaded = match cfg.mode {
        Mode::Weak => {
            let mut w = WeakConfig {
                k_prime: cfg.k_prime.unwrap_or(64),
                ell: cfg.ell,
                delta: cfg.delta,
                graph_seed: cfg.graph_seed,
                ..WeakConfig::default()
            };
            if let Some(a) = cfg.alpha {
                w.alpha = a;
            }
            if let Some(e) = cfg.epsilon {
                w.epsilon = e;
            }
            Loaded::Weak(WeakCode::new(&w, gen_seeded(128, cfg.seed)?)?)
        }
        Mode::Strong => {
            let rate: Rate = cfg.rate.as_deref().unwrap_or("1/4").parse().map_err(|_| Error::Format("bad rate".into()))?;
            let mut s = StrongConfig {
                t: cfg.t.unwrap_or(16),
                ell: cfg.ell,
                beta: cfg.beta,
                rate,
                delta: cfg.delta,
                alpha: cfg.alpha,
                kappa: cfg.kappa,
                graph_seed: cfg.graph_seed,
                ..StrongConfig::default()
            };
            if let Some(e) = cfg.epsilon {
                s.epsilon = e;
            }
            Loaded::Strong(StrongCode::new(&s, gen_seeded(128, cfg.seed)?)?)
        }
    };
    let code = loaded.code();
    let n = code.layout().len();
    let budget = cfg.budget_frac.map_or(code.budget(), |f| (f * n as f64).floor() as usize);
    if budget > code.budget() && !cfg.out_of_theorem {
        eprintln!("set out_of_theorem = true to exceed the assumed budget");
        bail!(Error::Budget { used: budget, budget: code.budget() });
    }
    let attacks = match &cfg.attacks {
        Some(names) => names.iter().map(|a| Attack::parse(a)).collect::<crlcc::Result<Vec<_>>>()?,
        None => Attack::all(),
    };
    let mut records = String::from(RECORD_HEADER);
    records.push('\n');
    let mut stats = Vec::new();
    for (a, attack) in attacks.iter().enumerate() {
        let rc = RoundConfig {
            budget,
            rounds: cfg.rounds,
            master_seed: cfg.seed.wrapping_add(a as u64 * 1_000_003),
            message_mode: cfg.message_mode,
            red_oracle: cfg.red_oracle,
        };
        let runs = run_rounds(code, attack, &rc)?;
        for r in &runs {
            records.push_str(&r.line());
            records.push('\n');
            if let Some(mask) = &r.transcript {
                eprintln!("fooling event: {} mask {:?}", r.line(), mask);
            }
        }
        stats.push(Stats::of(&runs));
    }
    if let Some(path) = &cfg.records {
        std::fs::write(path, records)?;
    }
    println!("{} code: k={} n={n} budget={budget} bits", code.kind(), code.message_bits());
    print!("{}", table(&stats));
    Ok(())
}

/// Returns whether the graph passed.
fn verify_graph(args: Command) -> anyhow::Result<bool> {
    let Command::VerifyGraph { n, delta, seed, max_r, out } = args else { unreachable!() };
    let g = build_local_expander(n, delta, seed)?;
    let report = verify_local_expansion(&g, delta, max_r)?;
    if let Some(path) = out {
        std::fs::write(path, g.to_bytes())?;
    }
    println!(
        "n={n} delta={delta} overlay degree={} max indegree={} pairs checked={} failures={}",
        g.overlay_degree(),
        g.max_indegree(),
        report.pairs_checked,
        report.failures.len()
    );
    for (v, r) in report.failures.iter().take(10) {
        println!("  not a {delta}-expander: v={v} r={r}");
    }
    Ok(report.passed())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::Format(_) | Error::Length { .. } => 3,
            Error::Refused(_) | Error::Budget { .. } => 4,
            Error::Param(_) | Error::Calibration { .. } => 2,
            Error::Internal(_) => 1,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 3;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        c @ Command::Encode { .. } => encode(c).map(|_| true),
        c @ Command::Corrupt { .. } => corrupt(c).map(|_| true),
        c @ Command::Query { .. } => query(c).map(|_| true),
        c @ Command::Sweep { .. } => sweep(c).map(|_| true),
        c @ Command::VerifyGraph { .. } => verify_graph(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
