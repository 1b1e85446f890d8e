mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use synstego::codec::{achievable_rate, key_cost, ErrorString, Message, StegoCodebook};
use synstego::keystream::{apply_pad, bits_at, block_draw_bits};
use synstego::protocol::{self, SimConfig};
use synstego::secrecy::{induced_distribution_on, secrecy_report, tv_to_channel, upper_bound};
use synstego::{ChannelKind, ChannelModel, KeySeed, KeyStream, WindowSpec};
use synstego_qecc::demo::run_demo;
use synstego_qecc::QeccError;

use config::Settings;

#[derive(Parser)]
#[command(name = "synstego", version, about = "Syndrome steganography toolkit")]
struct Cli {
    /// JSON file supplying any flag; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Codebook size against the entropy asymptote.
    Rate(Flags),
    /// Key bits consumed per block.
    Keycost(Flags),
    /// Exact distance between the emulated and true channel.
    Secrecy(Flags),
    /// Upper bound on hidden bits per block.
    Bound(Flags),
    /// Monte Carlo run of the full exchange.
    Simulate(Flags),
    /// Five-qubit code demonstration.
    DemoQecc(Flags),
    /// Message to error string.
    Encode(Flags),
    /// Error string to message.
    Decode(Flags),
    /// Grid over block lengths and band widths.
    Sweep(Flags),
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// Channel, e.g. `bitflip:p=0.1`, `depol:p=0.1`, `ru:p=0.7,0.2,0.1`.
    channel: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Band half-width in standard deviations, or `full`.
    #[arg(long)]
    d: Option<String>,
    /// Accept bands wider than the mean and clamp them at zero.
    #[arg(long)]
    clamp: bool,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    blocks: Option<u64>,
    /// 64 hex characters.
    #[arg(long)]
    seed: Option<String>,
    /// One-time-pad the message before encoding.
    #[arg(long)]
    otp: bool,
    /// CSV instead of JSON (sweep).
    #[arg(long)]
    csv: bool,
    /// Depolarizing probability for the demo.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    message: Option<String>,
    #[arg(long)]
    string: Option<String>,
    /// Key bit offset of the block.
    #[arg(long)]
    position: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    ds: Option<Vec<f64>>,
    /// Per-block CSV trace output path (simulate).
    #[arg(long)]
    trace: Option<String>,
    /// Skip Eve's likelihood-ratio test (simulate).
    #[arg(long)]
    no_eve: bool,
}

impl Flags {
    fn settings(self) -> Settings {
        Settings {
            channel: self.channel,
            n: self.n,
            d: self.d,
            clamp: self.clamp.then_some(true),
            delta: self.delta,
            eps: self.eps,
            blocks: self.blocks,
            seed: self.seed,
            otp: self.otp.then_some(true),
            csv: self.csv.then_some(true),
            p: self.p,
            trials: self.trials,
            message: self.message,
            string: self.string,
            position: self.position,
            ns: self.ns,
            ds: self.ds,
            trace: self.trace,
            eve_test: self.no_eve.then_some(false),
        }
    }
}

enum Failure {
    Usage(String),
    Domain(String),
    Integrity(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Domain(_) => 3,
            Failure::Integrity(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Domain(m) | Failure::Integrity(m) => m,
        }
    }
}

impl From<synstego::Error> for Failure {
    fn from(e: synstego::Error) -> Self {
        use synstego::Error as E;
        match e {
            E::Parse { .. } => Failure::Usage(e.to_string()),
            E::Integrity(_) | E::NotCorrectable { .. } => Failure::Integrity(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<QeccError> for Failure {
    fn from(e: QeccError) -> Self {
        match e {
            QeccError::Core(inner) => inner.into(),
            QeccError::Input(_) => Failure::Domain(e.to_string()),
            QeccError::Construction(_) | QeccError::Integrity(_) => Failure::Integrity(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: Settings,
    input_hashes: BTreeMap<String, String>,
    timestamp: u64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> Outcome<T> {
    v.clone().ok_or_else(|| Failure::Usage(format!("missing required flag --{flag}")))
}

fn channel(s: &Settings) -> Outcome<ChannelModel> {
    let spec = s
        .channel
        .as_deref()
        .ok_or_else(|| Failure::Usage("missing channel specification".into()))?;
    Ok(spec.parse::<ChannelModel>()?)
}

fn window(s: &Settings) -> Outcome<WindowSpec> {
    let d = s.d.as_deref().unwrap_or("2");
    if d == "full" {
        return Ok(WindowSpec::Full);
    }
    let v: f64 = d
        .parse()
        .map_err(|_| Failure::Usage(format!("--d expects a number or `full`, got `{d}`")))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Failure::Usage(format!("--d must be positive, got `{d}`")));
    }
    Ok(if s.clamp.unwrap_or(false) {
        WindowSpec::ClampedBand(v)
    } else {
        WindowSpec::Band(v)
    })
}

fn seed(s: &Settings) -> Outcome<KeySeed> {
    need(&s.seed, "seed")?
        .parse::<KeySeed>()
        .map_err(|e| Failure::Usage(format!("--seed: {e}")))
}

/// Fills defaults so the manifest records the configuration actually used.
fn resolve(cmd: &Cmd, s: Settings) -> Settings {
    let mut s = s;
    let uses_book = !matches!(cmd, Cmd::DemoQecc(_) | Cmd::Sweep(_));
    if uses_book && s.d.is_none() {
        s.d = Some("2".into());
    }
    match cmd {
        Cmd::Bound(_) | Cmd::Sweep(_) => {
            s.delta = s.delta.or(Some(0.01));
            s.eps = s.eps.or(Some(0.01));
        }
        Cmd::Simulate(_) => {
            s.blocks = s.blocks.or(Some(1000));
            s.eve_test = s.eve_test.or(Some(true));
        }
        Cmd::DemoQecc(_) => {
            s.p = s.p.or(Some(0.1));
            s.trials = s.trials.or(Some(100));
        }
        Cmd::Encode(_) | Cmd::Decode(_) => {
            s.position = s.position.or(Some(0));
        }
        _ => {}
    }
    if matches!(cmd, Cmd::Sweep(_)) {
        s.ds = s.ds.or(Some(vec![2.0]));
    }
    if matches!(cmd, Cmd::Simulate(_) | Cmd::Encode(_) | Cmd::Decode(_) | Cmd::DemoQecc(_)) && s.seed.is_none() {
        s.seed = Some("0".repeat(64));
    }
    s
}

impl Cmd {
    fn flags(&self) -> &Flags {
        match self {
            Cmd::Rate(f)
            | Cmd::Keycost(f)
            | Cmd::Secrecy(f)
            | Cmd::Bound(f)
            | Cmd::Simulate(f)
            | Cmd::DemoQecc(f)
            | Cmd::Encode(f)
            | Cmd::Decode(f)
            | Cmd::Sweep(f) => f,
        }
    }
}

fn name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Rate(_) => "rate",
        Cmd::Keycost(_) => "keycost",
        Cmd::Secrecy(_) => "secrecy",
        Cmd::Bound(_) => "bound",
        Cmd::Simulate(_) => "simulate",
        Cmd::DemoQecc(_) => "demo-qecc",
        Cmd::Encode(_) => "encode",
        Cmd::Decode(_) => "decode",
        Cmd::Sweep(_) => "sweep",
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn compile(s: &Settings) -> Outcome<StegoCodebook> {
    Ok(StegoCodebook::compile(&channel(s)?, need(&s.n, "n")?, window(s)?)?)
}

fn cmd_rate(s: &Settings) -> Outcome<Value> {
    let r = achievable_rate(&channel(s)?, need(&s.n, "n")?, window(s)?)?;
    Ok(to_value(&r))
}

fn cmd_keycost(s: &Settings) -> Outcome<Value> {
    let d = window(s)?;
    let d = match d {
        WindowSpec::Band(v) | WindowSpec::ClampedBand(v) => v,
        _ => return Err(Failure::Usage("keycost needs a numeric --d".into())),
    };
    let r = key_cost(&channel(s)?, need(&s.n, "n")?, d, s.clamp.unwrap_or(false))?;
    Ok(to_value(&r))
}

fn otp_domain(book: &StegoCodebook) -> BigUint {
    BigUint::from(1u32) << book.otp_width() as usize
}

fn cmd_secrecy(s: &Settings) -> Outcome<Value> {
    let book = compile(s)?;
    let report = if s.otp.unwrap_or(false) {
        secrecy_report(&book, &induced_distribution_on(&book, &otp_domain(&book))?)
    } else {
        tv_to_channel(&book)
    };
    Ok(to_value(&report))
}

fn cmd_bound(s: &Settings) -> Outcome<Value> {
    let ch = channel(s)?;
    let n = need(&s.n, "n")?;
    let book = StegoCodebook::compile(&ch, n, window(s)?)?;
    let r = upper_bound(&ch, n, need(&s.delta, "delta")?, need(&s.eps, "eps")?, book.m_bits())?;
    Ok(to_value(&r))
}

fn cmd_simulate(s: &Settings) -> Outcome<Value> {
    let config = SimConfig {
        channel: channel(s)?,
        n: need(&s.n, "n")?,
        window: window(s)?,
        blocks: need(&s.blocks, "blocks")?,
        seed: seed(s)?,
        otp: s.otp.unwrap_or(false),
        eve_test: s.eve_test.unwrap_or(true),
    };
    let r = protocol::run(&config)?;
    if let Some(path) = &s.trace {
        let mut out = String::from("block,weight,llr,key_bits\n");
        for row in &r.trace {
            writeln!(out, "{},{},{},{}", row.block, row.weight, row.llr, row.key_bits).expect("string write");
        }
        std::fs::write(path, out).map_err(|e| Failure::Usage(format!("cannot write trace {path}: {e}")))?;
    }
    let mut v = to_value(&r);
    v["within_99_band"] = json!(r.within_band());
    Ok(v)
}

fn cmd_demo(s: &Settings) -> Outcome<Value> {
    let key = seed(s)?;
    let demo_seed = u64::from_be_bytes(key.0[..8].try_into().expect("8 bytes"));
    let r = run_demo(need(&s.p, "p")?, need(&s.trials, "trials")?, demo_seed)?;
    Ok(to_value(&r))
}

/// Key layout of one block: subset draw first, then the pad.
fn pad(book: &StegoCodebook, key: &KeySeed, position: u64) -> BigUint {
    let draw = block_draw_bits(book.n_subsets_max().value());
    bits_at(key, position + draw, book.otp_width())
}

fn cmd_encode(s: &Settings) -> Outcome<Value> {
    let book = compile(s)?;
    let key = seed(s)?;
    let position = need(&s.position, "position")?;
    let text = need(&s.message, "message")?;
    let plain: Message = text.parse()?;
    let otp = s.otp.unwrap_or(false);
    let sent = if otp {
        if plain.index() >= &otp_domain(&book) {
            return Err(Failure::Domain(format!(
                "message {plain} needs more than the {} pad bits",
                book.otp_width()
            )));
        }
        Message(apply_pad(plain.index(), &pad(&book, &key, position)))
    } else {
        plain.clone()
    };
    let mut stream = KeyStream::at(key, position);
    let e = book.encode(&sent, &mut stream)?;
    let used = stream.consumed() + if otp { book.otp_width() } else { 0 };
    Ok(json!({
        "string": e.to_string(),
        "message": plain.to_string(),
        "key_bits_used": used,
        "next_position": position + used,
    }))
}

fn cmd_decode(s: &Settings) -> Outcome<Value> {
    let book = compile(s)?;
    let key = seed(s)?;
    let position = need(&s.position, "position")?;
    let text = need(&s.string, "string")?;
    let e = ErrorString::parse(&text, book.channel().alphabet_size())?;
    let mut stream = KeyStream::at(key, position);
    let received = book.decode(&e, &mut stream)?;
    let otp = s.otp.unwrap_or(false);
    let plain = if otp {
        Message(apply_pad(received.index(), &pad(&book, &key, position)))
    } else {
        received
    };
    let used = stream.consumed() + if otp { book.otp_width() } else { 0 };
    Ok(json!({
        "message": plain.to_string(),
        "key_bits_used": used,
        "next_position": position + used,
    }))
}

#[derive(Serialize)]
struct SweepRow {
    #[serde(rename = "N")]
    n: usize,
    p: f64,
    #[serde(rename = "D")]
    d: f64,
    delta: Option<f64>,
    #[serde(rename = "M_bits")]
    m_bits: f64,
    #[serde(rename = "M_upper")]
    m_upper: f64,
    tv: f64,
    #[serde(rename = "K")]
    k: Option<u64>,
}

fn sweep_rows(s: &Settings) -> Outcome<Vec<SweepRow>> {
    let ch = channel(s)?;
    let ns = need(&s.ns, "ns")?;
    let ds = need(&s.ds, "ds")?;
    let (delta, eps) = (need(&s.delta, "delta")?, need(&s.eps, "eps")?);
    let clamp = s.clamp.unwrap_or(false);
    let grid: Vec<(usize, f64)> = ns.iter().flat_map(|&n| ds.iter().map(move |&d| (n, d))).collect();
    grid.par_iter()
        .map(|&(n, d)| {
            let spec = if clamp { WindowSpec::ClampedBand(d) } else { WindowSpec::Band(d) };
            let book = StegoCodebook::compile(&ch, n, spec)?;
            let bound = upper_bound(&ch, n, delta, eps, book.m_bits())?;
            let k = if ch.kind() == ChannelKind::BitFlip && ch.error_probability() > 0.0 {
                Some(key_cost(&ch, n, d, clamp)?.k_measured)
            } else {
                None
            };
            Ok(SweepRow {
                n,
                p: ch.error_probability(),
                d,
                delta: book.window().delta,
                m_bits: book.m_bits(),
                m_upper: bound.m_upper,
                tv: tv_to_channel(&book).tv_distance,
                k,
            })
        })
        .collect::<Result<Vec<_>, synstego::Error>>()
        .map_err(Failure::from)
}

fn csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("N,p,D,delta,M_bits,M_upper,tv,K\n");
    for r in rows {
        let delta = r.delta.map(|v| v.to_string()).unwrap_or_default();
        let k = r.k.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{},{},{},{}", r.n, r.p, r.d, delta, r.m_bits, r.m_upper, r.tv, k)
            .expect("string write");
    }
    out
}

fn execute(cli: Cli) -> Outcome<String> {
    let (file, file_hash) = match &cli.config {
        Some(path) => {
            let (s, h) = config::load(path).map_err(Failure::Usage)?;
            (s, Some(h))
        }
        None => (Settings::default(), None),
    };
    let cmd = cli.cmd;
    let command = name(&cmd);
    let settings = resolve(&cmd, cmd.flags().clone().settings().over(file));

    if matches!(cmd, Cmd::Sweep(_)) && settings.csv.unwrap_or(false) {
        return Ok(csv(&sweep_rows(&settings)?));
    }
    let report = match cmd {
        Cmd::Rate(_) => cmd_rate(&settings)?,
        Cmd::Keycost(_) => cmd_keycost(&settings)?,
        Cmd::Secrecy(_) => cmd_secrecy(&settings)?,
        Cmd::Bound(_) => cmd_bound(&settings)?,
        Cmd::Simulate(_) => cmd_simulate(&settings)?,
        Cmd::DemoQecc(_) => cmd_demo(&settings)?,
        Cmd::Encode(_) => cmd_encode(&settings)?,
        Cmd::Decode(_) => cmd_decode(&settings)?,
        Cmd::Sweep(_) => to_value(&sweep_rows(&settings)?),
    };

    let mut input_hashes = BTreeMap::new();
    if let Some(h) = file_hash {
        input_hashes.insert("config_file".to_string(), h);
    }
    let resolved = serde_json::to_vec(&settings).expect("settings serialize");
    input_hashes.insert("resolved_config".to_string(), sha256_hex(&resolved));
    let manifest = RunManifest {
        tool: "synstego",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: settings,
        input_hashes,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    let out = json!({ "manifest": manifest, "report": report });
    Ok(serde_json::to_string_pretty(&out).expect("json") + "\n")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
