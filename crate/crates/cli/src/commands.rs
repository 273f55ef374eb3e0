use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use zerosum::bounds::{
    best_upper, best_upper_for_set, bounds_table, evaluate_bound, filtration_constants,
    lbound2_prime_condition, mainbound_prime_condition, BoundKind, BoundParams, BoundResult, BoundTarget, TheoremId,
};
use zerosum::engine::{self, EngineConfig};
use zerosum::exact::{
    self, threshold_record, ExactError, InvariantRecord, LengthSpec, Quantity, SearchOptions, Status, ThresholdRow,
};
use zerosum::extract::{self, ExtractionPlan, ProofStrategy};
use zerosum::group::ceil_div;
use zerosum::poly::{self, InstanceMode, WitnessInstance};
use zerosum::{parse_group, AbelianGroup, Error, GSeq};

use crate::cache::{Cache, CacheEntry, CacheKey, Stamp};
use crate::report::{Outcome, Table, Verdict};
use crate::{
    BoundsArgs, Cli, Command, ConjectureArgs, EllArgs, ExactCmd, ExactSArgs, ExtractArgs, GroupCmd, InputArgs,
    PolyArgs, PolyCmd, SearchArgs, StrategyArg, WitnessArgs,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Resource(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ResourceCap { .. } | Error::CubeTooLarge { .. } => CliError::Resource(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Ctx {
    cache: Cache,
    engine: EngineConfig,
    artifact_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
struct Check {
    name: String,
    holds: bool,
    detail: String,
}

impl Check {
    fn new(name: impl Into<String>, holds: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            holds,
            detail: detail.into(),
        }
    }
}

fn all_hold(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.holds)
}

fn check_rows(t: &mut Table, checks: &[Check]) {
    for c in checks {
        let mark = if c.holds { "pass" } else { "FAIL" };
        t.push([format!("check:{}", c.name), format!("{mark}: {}", c.detail)]);
    }
}

fn default_cache_path() -> PathBuf {
    std::env::home_dir()
        .unwrap_or_else(|| PathBuf::from("."))
        .join(".zerosum-cache.ndjson")
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    let cache = if cli.no_cache {
        Cache::disabled()
    } else {
        Cache::open(&cli.cache.clone().unwrap_or_else(default_cache_path))?
    };
    let mut engine = EngineConfig::default();
    if let Some(c) = cli.max_cells {
        engine.max_cells = c;
    }
    let mut ctx = Ctx {
        cache,
        engine,
        artifact_dir: cli.artifact_dir.clone(),
    };
    match cli.command {
        Command::Group {
            cmd: GroupCmd::Info { spec },
        } => group_info(&spec),
        Command::Exact { cmd } => match cmd {
            ExactCmd::S(a) => exact_s(&mut ctx, &a),
            ExactCmd::Davenport(a) => exact_davenport(&mut ctx, &a),
            ExactCmd::Ell(a) => exact_ell(&mut ctx, &a),
        },
        Command::Bounds(a) => bounds_cmd(&mut ctx, &a),
        Command::Witness(a) => witness(&mut ctx, &a),
        Command::Poly {
            cmd: PolyCmd::Check(a),
        } => poly_check(&mut ctx, &a),
        Command::Extract(a) => extract_cmd(&mut ctx, &a),
        Command::VerifyConjecture(a) => verify_conjecture(&mut ctx, &a),
    }
}

fn group(spec: &str) -> CliResult<AbelianGroup> {
    Ok(parse_group(spec)?)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn write_json(path: &Path, v: &impl Serialize) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(v).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_sequence(path: &Path, s: &GSeq) -> CliResult<()> {
    write_json(path, &s.to_file())
}

/// Writes a counterexample artifact and returns its path.
fn write_artifact(ctx: &Ctx, command: &str, g: &AbelianGroup, body: &Value) -> CliResult<String> {
    let stamp = Stamp::now();
    let name = format!(
        "{}-{}-{}.json",
        command.replace(' ', "-"),
        g.spec_string().replace(',', "x"),
        stamp.computed_at_ms
    );
    let path = ctx.artifact_dir.join(name);
    write_json(&path, &json!({ "command": command, "stamp": stamp, "evidence": body }))?;
    Ok(path.display().to_string())
}

fn load_sequence(path: &Path, expected: Option<&AbelianGroup>) -> CliResult<GSeq> {
    let text = fs::read_to_string(path)?;
    Ok(GSeq::from_json(&text, expected)?)
}

fn random_sequence(g: &AbelianGroup, len: u64, seed: u64) -> GSeq {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = g.order() as usize;
    GSeq::from_indices(g, (0..len).map(|_| rng.gen_range(0..order)))
}

// ---------------------------------------------------------------- group info

fn group_info(spec: &str) -> CliResult<Outcome> {
    let g = group(spec)?;
    let mut body = json!({
        "group": g.factors(),
        "spec": g.spec_string(),
        "order": g.order(),
        "exponent": g.exponent(),
        "rank": g.rank(),
        "invariant_factors": g.invariant_factors(),
    });
    let mut t = Table::pairs([
        ("group", g.spec_string()),
        ("order", g.order().to_string()),
        ("exponent", g.exponent().to_string()),
        ("rank", g.rank().to_string()),
        ("invariant_factors", join(g.invariant_factors())),
    ]);
    if let Some(prof) = g.pgroup_profile() {
        let (p, q, dav, d) = (prof.p, prof.q, prof.davenport, prof.dim_d);
        body["pgroup"] = json!({ "p": p, "q": q, "davenport": dav, "dim_d": d });
        for (k, v) in [("p", p), ("q", q), ("davenport", dav), ("dim_d", d)] {
            t.push([k.to_string(), v.to_string()]);
        }
        let half = 3 * ceil_div(d, 2);
        let (mb, mb_inst) = mainbound_prime_condition(p, q, dav, d);
        let (lb, lb_inst) = lbound2_prime_condition(p, q, dav, d);
        let conds = vec![
            Check::new("sets", p >= d, format!("p = {p} ≥ d = {d}")),
            Check::new("half", p >= half, format!("p = {p} ≥ 3⌈d/2⌉ = {half}")),
            Check::new("2d", p + 1 >= 2 * d, format!("p = {p} ≥ 2d − 1 = {}", 2 * d - 1)),
            Check::new("mainbound", mb, mb_inst),
            Check::new("lbound2", lb, lb_inst),
            Check::new("pcase", p >= d, format!("p = {p} ≥ d = {d}")),
        ];
        for c in &conds {
            t.push([format!("hypothesis:{}", c.name), format!("{}: {}", c.holds, c.detail)]);
        }
        body["prime_conditions"] = to_value(&conds);
    } else {
        let comps: Vec<Value> = g
            .primary_components()
            .iter()
            .map(|(p, h)| json!({ "p": p, "factors": h.factors() }))
            .collect();
        for (p, h) in g.primary_components() {
            t.push([format!("component:{p}"), h.spec_string()]);
        }
        body["primary_components"] = Value::Array(comps);
    }
    Ok(Outcome::new("group info", body, t))
}

// ---------------------------------------------------------------- exact

enum Obtained {
    Entry(CacheEntry),
    Stopped(Outcome),
}

fn search_options(ctx: &Ctx, a: &SearchArgs) -> SearchOptions {
    SearchOptions {
        cap: a.cap,
        normalize_first: a.normalize,
        split_depth: a.split_depth,
        engine: ctx.engine,
    }
}

/// Cached exact record for `key`, computing and storing it on a miss.
fn obtain(
    ctx: &mut Ctx,
    command: &'static str,
    g: &AbelianGroup,
    key: CacheKey,
    compute: impl FnOnce() -> Result<InvariantRecord, ExactError>,
) -> CliResult<Obtained> {
    if let Some(e) = ctx.cache.lookup(&key).filter(|e| e.record.status == Status::Exact) {
        eprintln!("cache hit: {} {:?}", key.group, key.quantity);
        return Ok(Obtained::Entry(e.clone()));
    }
    let start = Instant::now();
    match compute() {
        Ok(record) => {
            let entry = CacheEntry {
                key,
                record,
                stamp: Stamp::now(),
                wall_ms: start.elapsed().as_millis() as u64,
            };
            ctx.cache.put(entry.clone())?;
            Ok(Obtained::Entry(entry))
        }
        Err(ExactError::Cap(hit)) => {
            let forbidden = key.lengths.as_ref().map(LengthSpec::lengths);
            let engine_lengths = engine::zero_sum_lengths(&hit.witness, &ctx.engine).ok();
            let avoids = engine_lengths.as_ref().map(|ls| match &forbidden {
                Some(f) => ls.is_disjoint(f),
                None => ls.len() == 1,
            });
            let mut body = json!({
                "group": g.factors(),
                "quantity": key.quantity,
                "lengths": forbidden,
                "cap": hit.cap,
                "proven_by": hit.proven_by,
                "witness": hit.witness,
                "engine_verified_avoider": avoids,
            });
            let mut t = Table::pairs([
                ("group", g.spec_string()),
                ("cap", hit.cap.to_string()),
                ("proven_by", hit.proven_by.clone().unwrap_or_default()),
                ("witness", hit.witness.to_string()),
            ]);
            if hit.proven_by.is_some() {
                let path = write_artifact(ctx, command, g, &body)?;
                t.push(["artifact".to_string(), path.clone()]);
                body["artifact"] = Value::from(path);
                Ok(Obtained::Stopped(
                    Outcome::new(command, body, t).with_verdict(Verdict::Inconsistency),
                ))
            } else {
                Ok(Obtained::Stopped(
                    Outcome::new(command, body, t).with_verdict(Verdict::ResourceCap),
                ))
            }
        }
        Err(ExactError::Other(e)) => Err(e.into()),
    }
}

fn target_matches(target: &Option<BoundTarget>, len: u64) -> bool {
    match target {
        Some(BoundTarget::Length(l)) => *l == len,
        Some(BoundTarget::LengthSet(ls)) => ls.as_slice() == [len],
        _ => false,
    }
}

/// Compares an exact value with every applicable statement about it.
fn sandwich(value: u64, len: u64, results: &[BoundResult]) -> Vec<Check> {
    let mut out = Vec::new();
    for r in results.iter().filter(|r| r.applicable && target_matches(&r.target, len)) {
        let Some(v) = r.value else { continue };
        let (holds, rel) = match r.kind {
            BoundKind::Upper => (value <= v, format!("{value} ≤ {v}")),
            BoundKind::Equality => (value == v, format!("{value} = {v}")),
            BoundKind::Lower if r.strict == Some(true) => (value > v, format!("{value} > {v}")),
            BoundKind::Lower => (value >= v, format!("{value} ≥ {v}")),
            BoundKind::Conjectured => continue,
        };
        out.push(Check::new(format!("{}:{}", r.theorem, kind_str(r.kind)), holds, rel));
    }
    out
}

fn kind_str(k: BoundKind) -> &'static str {
    match k {
        BoundKind::Upper => "upper",
        BoundKind::Lower => "lower",
        BoundKind::Equality => "equality",
        BoundKind::Conjectured => "conjectured",
    }
}

/// Statements about `s_len(G)` usable in a sandwich check.
fn statements_for(g: &AbelianGroup, len: u64) -> Vec<BoundResult> {
    let n = g.exponent();
    if len == 0 || len % n != 0 {
        return Vec::new();
    }
    bounds_table(g, len / n)
}

fn sk_checks(g: &AbelianGroup, rec: &InvariantRecord) -> CliResult<Vec<Check>> {
    let mut checks = vec![Check::new(
        "witness",
        exact::verify_record(rec)?,
        format!(
            "engine re-verifies an avoider of length {}",
            rec.witness.as_ref().map_or(0, |w| w.len())
        ),
    )];
    let lens = rec.lengths.as_ref().map(LengthSpec::lengths).unwrap_or_default();
    if lens.len() == 1 {
        let len = *lens.iter().next().expect("one length");
        checks.extend(sandwich(rec.value, len, &statements_for(g, len)));
        if len % g.exponent() == 0 {
            let best = best_upper(g, len, &[]);
            if let Some(v) = best.value {
                checks.push(Check::new("best_upper", rec.value <= v, format!("{} ≤ {v} via {}", rec.value, best.theorem)));
            }
        }
    } else if let Some((v, why)) = best_upper_for_set(g, &lens) {
        checks.push(Check::new(
            "best_upper_for_set",
            rec.value <= v,
            format!("{} ≤ {v} ({why})", rec.value),
        ));
    }
    Ok(checks)
}

fn record_rows(t: &mut Table, rec: &InvariantRecord) {
    t.push(["group".to_string(), rec.group.spec_string()]);
    t.push(["quantity".to_string(), to_value(&rec.quantity).as_str().unwrap_or_default().to_string()]);
    if let Some(l) = &rec.lengths {
        t.push(["lengths".to_string(), join(l.lengths())]);
    }
    t.push(["value".to_string(), rec.value.to_string()]);
    t.push(["status".to_string(), to_value(&rec.status).as_str().unwrap_or_default().to_string()]);
    t.push(["provenance".to_string(), rec.provenance.to_string()]);
    if let Some(w) = &rec.witness {
        t.push(["witness".to_string(), w.to_string()]);
    }
}

fn finish_record(
    ctx: &Ctx,
    command: &'static str,
    entry: &CacheEntry,
    checks: Vec<Check>,
    witness_out: Option<&PathBuf>,
) -> CliResult<Outcome> {
    let rec = &entry.record;
    if let (Some(path), Some(w)) = (witness_out, &rec.witness) {
        write_sequence(path, w)?;
    }
    let mut body = json!({
        "record": rec,
        "stamp": entry.stamp,
        "wall_ms": entry.wall_ms,
        "checks": checks,
    });
    let mut t = Table::new(["field", "value"]);
    record_rows(&mut t, rec);
    t.push(["wall_ms".to_string(), entry.wall_ms.to_string()]);
    check_rows(&mut t, &checks);
    let mut out_verdict = Verdict::Ok;
    if !all_hold(&checks) {
        let path = write_artifact(ctx, command, &rec.group, &body)?;
        t.push(["artifact".to_string(), path.clone()]);
        body["artifact"] = Value::from(path);
        out_verdict = Verdict::Inconsistency;
    }
    Ok(Outcome::new(command, body, t).with_verdict(out_verdict))
}

fn exact_s(ctx: &mut Ctx, a: &ExactSArgs) -> CliResult<Outcome> {
    let g = group(&a.search.group)?;
    let spec = if a.multipliers.is_empty() {
        LengthSpec::absolute(a.lengths.iter().copied())?
    } else {
        LengthSpec::scaled(a.multipliers.iter().copied(), a.unit.unwrap_or(g.exponent()))?
    };
    let opts = search_options(ctx, &a.search);
    let key = CacheKey::new(&g, Quantity::SK, Some(&spec));
    let entry = match obtain(ctx, "exact s", &g, key, || exact::exact_s(&g, &spec, &opts))? {
        Obtained::Entry(e) => e,
        Obtained::Stopped(o) => return Ok(o),
    };
    let checks = sk_checks(&g, &entry.record)?;
    finish_record(ctx, "exact s", &entry, checks, a.search.witness_out.as_ref())
}

fn exact_davenport(ctx: &mut Ctx, a: &SearchArgs) -> CliResult<Outcome> {
    let g = group(&a.group)?;
    let opts = search_options(ctx, a);
    let key = CacheKey::new(&g, Quantity::Davenport, None);
    let entry = match obtain(ctx, "exact davenport", &g, key, || exact::exact_davenport(&g, &opts))? {
        Obtained::Entry(e) => e,
        Obtained::Stopped(o) => return Ok(o),
    };
    let rec = &entry.record;
    let mut checks = vec![Check::new(
        "witness",
        exact::verify_record(rec)?,
        "engine re-verifies a zero-sum-free witness",
    )];
    let inv = g.invariant_factors();
    let trivial_lower = 1 + inv.iter().map(|n| n - 1).sum::<u64>();
    match g.pgroup_profile() {
        Some(prof) => checks.push(Check::new(
            "olson",
            rec.value == prof.davenport,
            format!("{} = {}", rec.value, prof.davenport),
        )),
        None => {
            checks.push(Check::new(
                "lower",
                rec.value >= trivial_lower,
                format!("{} ≥ 1 + Σ(n_i − 1) = {trivial_lower}", rec.value),
            ));
            checks.push(Check::new("upper", rec.value <= g.order(), format!("{} ≤ |G| = {}", rec.value, g.order())));
        }
    }
    finish_record(ctx, "exact davenport", &entry, checks, a.witness_out.as_ref())
}

struct Scan {
    rows: Vec<ThresholdRow>,
    entries: Vec<CacheEntry>,
}

/// Exact `s_{kq}` for `k = 1..=kmax`, through the cache.
fn scan(ctx: &mut Ctx, command: &'static str, a: &SearchArgs, kmax: u64) -> CliResult<Result<Scan, Outcome>> {
    let g = group(&a.group)?;
    let prof = *g.require_pgroup()?;
    if kmax == 0 {
        return Err(CliError::Usage("--kmax must be at least 1".into()));
    }
    let opts = search_options(ctx, a);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for k in 1..=kmax {
        let len = k * prof.q;
        let spec = LengthSpec::absolute([len])?;
        let key = CacheKey::new(&g, Quantity::SK, Some(&spec));
        let e = match obtain(ctx, command, &g, key, || exact::exact_s(&g, &spec, &opts))? {
            Obtained::Entry(e) => e,
            Obtained::Stopped(o) => return Ok(Err(o)),
        };
        rows.push(ThresholdRow {
            k,
            length: len,
            exact: e.record.value,
            conjectured: len + prof.davenport - 1,
        });
        entries.push(e);
    }
    Ok(Ok(Scan { rows, entries }))
}

fn store_ell(ctx: &mut Ctx, rec: &InvariantRecord) -> CliResult<()> {
    ctx.cache.put(CacheEntry {
        key: CacheKey::new(&rec.group, Quantity::Ell, None),
        record: rec.clone(),
        stamp: Stamp::now(),
        wall_ms: 0,
    })?;
    Ok(())
}

fn per_k(entries: &[CacheEntry]) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|e| json!({ "record": e.record, "stamp": e.stamp, "wall_ms": e.wall_ms }))
            .collect(),
    )
}

fn exact_ell(ctx: &mut Ctx, a: &EllArgs) -> CliResult<Outcome> {
    let scan = match scan(ctx, "exact ell", &a.search, a.kmax)? {
        Ok(s) => s,
        Err(o) => return Ok(o),
    };
    let g = group(&a.search.group)?;
    let rec = threshold_record(&g, &scan.rows);
    store_ell(ctx, &rec)?;
    let mut checks = Vec::new();
    for (row, e) in scan.rows.iter().zip(&scan.entries) {
        checks.push(Check::new(
            format!("k={}:lower_construction", row.k),
            row.exact >= row.conjectured,
            format!("{} ≥ {}", row.exact, row.conjectured),
        ));
        checks.extend(
            sk_checks(&g, &e.record)?
                .into_iter()
                .map(|c| Check::new(format!("k={}:{}", row.k, c.name), c.holds, c.detail)),
        );
    }
    let mut body = json!({
        "record": rec,
        "rows": scan.rows,
        "per_k": per_k(&scan.entries),
        "checks": checks,
    });
    let mut t = Table::new(["k", "length", "exact", "conjectured"]);
    for r in &scan.rows {
        t.push([r.k, r.length, r.exact, r.conjectured]);
    }
    let status = to_value(&rec.status);
    t.push([
        "ell".to_string(),
        String::new(),
        rec.value.to_string(),
        format!("{} ({})", status.as_str().unwrap_or_default(), rec.provenance),
    ]);
    let mut verdict = Verdict::Ok;
    if !all_hold(&checks) {
        body["artifact"] = Value::from(write_artifact(ctx, "exact ell", &g, &body)?);
        verdict = Verdict::Inconsistency;
    }
    Ok(Outcome::new("exact ell", body, t).with_verdict(verdict))
}

fn verify_conjecture(ctx: &mut Ctx, a: &ConjectureArgs) -> CliResult<Outcome> {
    let scan = match scan(ctx, "verify-conjecture", &a.search, a.kmax)? {
        Ok(s) => s,
        Err(o) => return Ok(o),
    };
    let g = group(&a.search.group)?;
    let prof = *g.require_pgroup()?;
    let mut rows = Vec::new();
    let mut t = Table::new(["k", "length", "exact", "conjectured", "relation", "regime", "consistent"]);
    let mut consistent_all = true;
    for (row, e) in scan.rows.iter().zip(&scan.entries) {
        let relation = match row.exact.cmp(&row.conjectured) {
            std::cmp::Ordering::Equal => "equality",
            std::cmp::Ordering::Greater => "strict",
            std::cmp::Ordering::Less => "below",
        };
        // below kq = D the lower bound is strict; from there on equality is conjectured
        let small = row.length < prof.davenport;
        let regime = if small { "kq<D" } else { "kq>=D" };
        let consistent = match (small, relation) {
            (_, "below") => false,
            (true, r) => r == "strict",
            (false, r) => r == "equality",
        };
        let witness_ok = exact::verify_record(&e.record)?;
        let consistent = consistent && witness_ok;
        consistent_all &= consistent;
        t.push([
            row.k.to_string(),
            row.length.to_string(),
            row.exact.to_string(),
            row.conjectured.to_string(),
            relation.to_string(),
            regime.to_string(),
            consistent.to_string(),
        ]);
        rows.push(json!({
            "k": row.k,
            "length": row.length,
            "exact": row.exact,
            "conjectured": row.conjectured,
            "relation": relation,
            "regime": regime,
            "consistent": consistent,
            "witness": e.record.witness,
            "stamp": e.stamp,
        }));
    }
    let rec = threshold_record(&g, &scan.rows);
    store_ell(ctx, &rec)?;
    let mut body = json!({
        "group": g.factors(),
        "kmax": a.kmax,
        "davenport": prof.davenport,
        "rows": rows,
        "ell": rec,
    });
    let mut verdict = Verdict::Ok;
    if !consistent_all {
        body["artifact"] = Value::from(write_artifact(ctx, "verify-conjecture", &g, &body)?);
        verdict = Verdict::Inconsistency;
    }
    Ok(Outcome::new("verify-conjecture", body, t).with_verdict(verdict))
}

// ---------------------------------------------------------------- bounds

fn bound_row(t: &mut Table, r: &BoundResult) {
    let target = match &r.target {
        Some(BoundTarget::Length(l)) => l.to_string(),
        Some(BoundTarget::LengthSet(ls)) => format!("{{{}}}", join(ls)),
        Some(BoundTarget::Threshold) => "ell".to_string(),
        None => String::new(),
    };
    let hyps = r
        .hypotheses
        .iter()
        .map(|h| format!("{} [{}] {}", h.condition, h.instantiation, if h.holds { "holds" } else { "fails" }))
        .collect::<Vec<_>>()
        .join("; ");
    t.push([
        r.theorem.to_string(),
        kind_str(r.kind).to_string(),
        r.applicable.to_string(),
        r.value.map(|v| v.to_string()).unwrap_or_default(),
        target,
        r.strict.map(|s| s.to_string()).unwrap_or_default(),
        hyps,
    ]);
}

fn bounds_cmd(ctx: &mut Ctx, a: &BoundsArgs) -> CliResult<Outcome> {
    let g = group(&a.group)?;
    let known: Vec<InvariantRecord> = ctx
        .cache
        .known_for(&g)
        .into_iter()
        .filter(|r| r.quantity == Quantity::SK && r.status != Status::LowerBound)
        .collect();
    let mut results = Vec::new();
    if let Some(id) = &a.theorem {
        let theorem: TheoremId = id.parse()?;
        let params = BoundParams {
            k: a.k,
            multipliers: (!a.multipliers.is_empty()).then(|| a.multipliers.iter().copied().collect()),
            a: a.a,
            b: a.b,
            s_a: a.s_a,
            s_b: a.s_b,
            q: a.q,
            s_an_subgroup: a.s_an,
            factors: (!a.factors.is_empty()).then(|| a.factors.clone()),
            davenport: a.davenport,
        };
        results.push(evaluate_bound(theorem, &g, &params)?);
    } else if let Some(k) = a.k {
        if k == 0 {
            return Err(CliError::Usage("--k must be at least 1".into()));
        }
        results.extend(bounds_table(&g, k));
        results.push(best_upper(&g, k * g.exponent(), &known));
    }
    if let Some(target) = a.target {
        results.push(best_upper(&g, target, &known));
    }
    if results.is_empty() {
        return Err(CliError::Usage("give --k, --target or --theorem".into()));
    }
    // cached exact values must sit inside every applicable statement
    let mut checks = Vec::new();
    for rec in known.iter().filter(|r| r.status == Status::Exact) {
        let lens = rec.lengths.as_ref().map(LengthSpec::lengths).unwrap_or_default();
        if let [len] = lens.iter().copied().collect::<Vec<_>>()[..] {
            checks.extend(
                sandwich(rec.value, len, &results)
                    .into_iter()
                    .map(|c| Check::new(format!("s_{len}={}:{}", rec.value, c.name), c.holds, c.detail)),
            );
        }
    }
    let mut body = json!({
        "group": g.factors(),
        "k": a.k,
        "target": a.target,
        "results": results,
        "checks": checks,
    });
    let mut t = Table::new(["theorem", "kind", "applicable", "value", "target", "strict", "hypotheses"]);
    for r in &results {
        bound_row(&mut t, r);
    }
    let mut verdict = Verdict::Ok;
    if !all_hold(&checks) {
        body["artifact"] = Value::from(write_artifact(ctx, "bounds", &g, &body)?);
        verdict = Verdict::Inconsistency;
    }
    Ok(Outcome::new("bounds", body, t).with_verdict(verdict))
}

// ---------------------------------------------------------------- witness

fn witness(ctx: &mut Ctx, a: &WitnessArgs) -> CliResult<Outcome> {
    let g = group(&a.group)?;
    let rec = exact::lower_bound_record(&g, a.k)?;
    let w = rec.witness.clone().expect("construction carries its witness");
    let target = a.k * g.exponent();
    let lens = engine::zero_sum_lengths(&w, &ctx.engine)?;
    let checks = vec![Check::new(
        "avoids_target",
        !lens.contains(&target),
        format!("no zero-sum subsequence of length {target} among {} terms", w.len()),
    )];
    if let Some(path) = &a.out {
        write_sequence(path, &w)?;
    }
    ctx.cache.put(CacheEntry {
        key: CacheKey::new(&g, Quantity::SK, rec.lengths.as_ref()),
        record: rec.clone(),
        stamp: Stamp::now(),
        wall_ms: 0,
    })?;
    let mut body = json!({
        "record": rec,
        "target_length": target,
        "zero_sum_lengths": lens,
        "checks": checks,
    });
    let mut t = Table::new(["field", "value"]);
    record_rows(&mut t, &rec);
    t.push(["zero_sum_lengths".to_string(), join(&lens)]);
    check_rows(&mut t, &checks);
    let mut verdict = Verdict::Ok;
    if !all_hold(&checks) {
        body["artifact"] = Value::from(write_artifact(ctx, "witness", &g, &body)?);
        verdict = Verdict::Inconsistency;
    }
    Ok(Outcome::new("witness", body, t).with_verdict(verdict))
}

// ---------------------------------------------------------------- poly

fn input_sequence(
    input: &InputArgs,
    g: Option<&AbelianGroup>,
    default_len: impl FnOnce(&AbelianGroup) -> CliResult<u64>,
) -> CliResult<GSeq> {
    if let Some(path) = &input.sequence {
        return load_sequence(path, g);
    }
    let g = g.ok_or_else(|| CliError::Usage("--random needs --group".into()))?;
    let seed = input
        .seed
        .ok_or_else(|| CliError::Usage("--random needs --seed".into()))?;
    let len = match input.length {
        Some(l) => l,
        None => default_len(g)?,
    };
    Ok(random_sequence(g, len, seed))
}

fn poly_check(ctx: &mut Ctx, a: &PolyArgs) -> CliResult<Outcome> {
    let g = group(&a.group)?;
    let ks: BTreeSet<u64> = a.multipliers.iter().copied().collect();
    let s = input_sequence(&a.input, Some(&g), |g| Ok(poly::theorem_length(g, &ks)?))?;
    let mode = if a.exploratory {
        InstanceMode::Exploratory
    } else {
        InstanceMode::Theorem
    };
    let w = WitnessInstance::new(s.clone(), ks.iter().copied(), mode)?;
    let rep = poly::vanishing_report_with_limit(&w, a.max_hits)?;
    let mut checks = vec![
        Check::new("engine_confirmed", rep.engine_confirmed, "every listed nonzero point is a zero-sum subsequence"),
        Check::new(
            "matches_prediction",
            rep.matches_prediction,
            format!("{} mismatches against the closed-form support", rep.prediction_mismatches),
        ),
    ];
    if mode == InstanceMode::Theorem {
        checks.push(Check::new(
            "full_coefficient",
            rep.full_coefficient == 0,
            format!("top coefficient ≡ {} (mod {})", rep.full_coefficient, rep.p),
        ));
        checks.push(Check::new(
            "nonzero_point",
            rep.hit_count > 0,
            format!("{} nonzero points besides the origin", rep.hit_count),
        ));
        let kq: BTreeSet<u64> = ks.iter().map(|k| k * rep.q).collect();
        let found = engine::find_zero_sum(&s, &kq, &ctx.engine)?;
        checks.push(Check::new(
            "conclusion",
            found.is_some(),
            match &found {
                Some(t) => format!("zero-sum subsequence of length {} in Kq", t.len()),
                None => format!("no zero-sum subsequence with length in {{{}}}", join(&kq)),
            },
        ));
    }
    let mut body = json!({ "input": s, "report": rep, "checks": checks });
    let mut t = Table::pairs([
        ("group", g.spec_string()),
        ("multipliers", join(&ks)),
        ("mode", to_value(&rep.mode).as_str().unwrap_or_default().to_string()),
        ("m", rep.m.to_string()),
        ("critical_length", rep.critical_length.to_string()),
        ("origin", rep.origin.value.to_string()),
        ("full_coefficient", rep.full_coefficient.to_string()),
        ("hit_count", rep.hit_count.to_string()),
        ("lengths_in_kq", rep.lengths_in_kq.to_string()),
    ]);
    check_rows(&mut t, &checks);
    let mut verdict = Verdict::Ok;
    if !all_hold(&checks) {
        body["artifact"] = Value::from(write_artifact(ctx, "poly check", &g, &body)?);
        verdict = Verdict::Inconsistency;
    }
    Ok(Outcome::new("poly check", body, t).with_verdict(verdict))
}

// ---------------------------------------------------------------- extract

fn need(v: Option<u64>, flag: &str) -> CliResult<u64> {
    v.ok_or_else(|| CliError::Usage(format!("this strategy needs {flag}")))
}

fn proof_strategy(a: &ExtractArgs) -> CliResult<Option<ProofStrategy>> {
    Ok(match a.strategy {
        StrategyArg::TwoPiece2d => Some(ProofStrategy::TwoPiece2d { k: need(a.k, "--k")? }),
        StrategyArg::MainTheorem => Some(ProofStrategy::MainTheorem { k: need(a.k, "--k")? }),
        StrategyArg::HalfLemma => {
            if a.multipliers.is_empty() {
                return Err(CliError::Usage("half_lemma needs --multipliers".into()));
            }
            Some(ProofStrategy::HalfLemma {
                multipliers: a.multipliers.iter().copied().collect(),
            })
        }
        _ => None,
    })
}

/// Input length the strategy asks for, when it can be derived.
fn strategy_length(a: &ExtractArgs, g: &AbelianGroup) -> CliResult<u64> {
    if let Some(ps) = proof_strategy(a)? {
        return Ok(extract::required_length(g, &ps)?);
    }
    match a.strategy {
        StrategyArg::PqLift => Ok(extract::pq_lift_length(g)?),
        StrategyArg::Subadditive => match (a.s_a, a.s_b) {
            (Some(sa), Some(sb)) => Ok((sa + need(a.b, "--b")?).max(sb)),
            _ => Err(CliError::Usage("give --length or both --s-a and --s-b".into())),
        },
        StrategyArg::Filtration => {
            let (s_an, b, q) = (need(a.s_an, "--s-an")?, need(a.b, "--b")?, need(a.q, "--q")?);
            filtration_need(g, s_an, b, q)
        }
        _ => unreachable!("proof-guided strategies handled above"),
    }
}

fn filtration_need(g: &AbelianGroup, s_an: u64, b: u64, q: u64) -> CliResult<u64> {
    let c = filtration_constants(g, q)?;
    Ok(s_an * b * q + (2 * c.d_h - 2) * q + 3 * c.davenport_h - 3)
}

/// Whether a failed extraction contradicts a statement whose premises all hold.
fn premise_established(a: &ExtractArgs, s: &GSeq) -> CliResult<bool> {
    let g = s.group();
    Ok(match a.strategy {
        StrategyArg::Subadditive => a.s_a.is_some() && a.s_b.is_some(),
        StrategyArg::Filtration => match (a.s_an, a.b, a.q) {
            (Some(s_an), Some(b), Some(q)) => {
                let c = filtration_constants(g, q)?;
                let (prime_ok, _) = mainbound_prime_condition(c.p, q, c.davenport_h, c.d_h);
                prime_ok && s.len() >= filtration_need(g, s_an, b, q)?
            }
            _ => false,
        },
        _ => true,
    })
}

fn run_strategy(a: &ExtractArgs, s: &GSeq, cfg: &EngineConfig) -> zerosum::Result<ExtractionPlan> {
    match a.strategy {
        StrategyArg::Subadditive => {
            let (x, y) = (
                a.a.ok_or(Error::MissingParam("a"))?,
                a.b.ok_or(Error::MissingParam("b"))?,
            );
            let premise = a.s_a.zip(a.s_b);
            extract::split_subadditive(s, x, y, premise, cfg)
        }
        StrategyArg::PqLift => extract::extract_pq_lift(s, cfg),
        StrategyArg::Filtration => extract::extract_filtration(
            s,
            a.a.ok_or(Error::MissingParam("a"))?,
            a.b.ok_or(Error::MissingParam("b"))?,
            a.q.ok_or(Error::MissingParam("q"))?,
            a.s_an,
            cfg,
        ),
        _ => {
            let ps = proof_strategy(a)
                .map_err(|e| Error::InvalidParam(e.to_string()))?
                .expect("proof-guided strategy");
            extract::extract_proof_guided(s, &ps, cfg)
        }
    }
}

fn strategy_name(a: &ExtractArgs) -> &'static str {
    match a.strategy {
        StrategyArg::Subadditive => "subadditive",
        StrategyArg::PqLift => "pq_lift",
        StrategyArg::TwoPiece2d => "two_piece_2d",
        StrategyArg::HalfLemma => "half_lemma",
        StrategyArg::MainTheorem => "main_theorem",
        StrategyArg::Filtration => "filtration",
    }
}

fn extract_cmd(ctx: &mut Ctx, a: &ExtractArgs) -> CliResult<Outcome> {
    let g = a.group.as_deref().map(group).transpose()?;
    let s = input_sequence(&a.input, g.as_ref(), |g| strategy_length(a, g))?;
    let g = s.group().clone();
    match run_strategy(a, &s, &ctx.engine) {
        Ok(plan) => {
            let verified = plan.verify(&s);
            let checks = vec![Check::new(
                "reverified",
                verified,
                format!("T | S, σ(T) = 0, |T| = {} ∈ {{{}}}", plan.result.len(), join(&plan.target_lengths)),
            )];
            if let Some(path) = &a.out {
                write_sequence(path, &plan.result)?;
            }
            let mut t = Table::new(["role", "length", "sum", "sequence"]);
            for e in &plan.trace {
                t.push([e.role.clone(), e.length.to_string(), e.sum.to_string(), e.sequence.to_string()]);
            }
            let mut body = json!({ "input": s, "plan": plan, "checks": checks });
            let mut verdict = Verdict::Ok;
            if !verified {
                body["artifact"] = Value::from(write_artifact(ctx, "extract", &g, &body)?);
                verdict = Verdict::Inconsistency;
            }
            Ok(Outcome::new("extract", body, t).with_verdict(verdict))
        }
        Err(Error::PremiseViolation(msg)) if premise_established(a, &s)? => {
            let lens = engine::zero_sum_lengths(&s, &ctx.engine).ok();
            let mut body = json!({
                "strategy": strategy_name(a),
                "input": s,
                "failure": msg,
                "engine_zero_sum_lengths": lens,
            });
            let path = write_artifact(ctx, "extract", &g, &body)?;
            body["artifact"] = Value::from(path.clone());
            let t = Table::pairs([
                ("strategy", strategy_name(a).to_string()),
                ("failure", msg),
                ("artifact", path),
            ]);
            Ok(Outcome::new("extract", body, t).with_verdict(Verdict::Inconsistency))
        }
        Err(Error::PremiseViolation(msg)) => Err(CliError::Usage(format!(
            "extraction failed without an established premise: {msg}"
        ))),
        Err(e) => Err(e.into()),
    }
}
