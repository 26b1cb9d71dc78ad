//! Acceptance suite. Prints one line per criterion and exits non-zero when a
//! criterion fails that is not listed in `KNOWN_UNMET`.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use octopus_core::crypto::laplace::{ceiled_mean, sample_truncated_laplace};
use octopus_core::crypto::paillier::paillier_keygen;
use octopus_core::crypto::{PaillierPublicKey, PaillierSecretKey, PedersenParams};
use octopus_core::dp::{derive_laplace_params, privacy_of};
use octopus_core::pir::{
    classify_response, decrypt_response, empty_sentinel_response, gen_query, gen_query_with_plaintexts,
    naive_respond, sparse_respond, Decrypted, DenseSlot, QueryShape, RespondOutcome, ResponseType, SparseDatabase,
};
use octopus_core::protocol::tags::{TAG_LENDER_RESPONSE, TAG_RESPONSES};
use octopus_core::protocol::{
    run_octopus, AbortKind, AdversaryFlags, Party, QueryKind, QueryResult, SessionReport,
};
use octopus_core::zk::{
    prove_binary, prove_correspondence, prove_ped_multiplication, prove_ped_range, prove_plaintext_knowledge,
    prove_valid_query, verify_binary, verify_correspondence, verify_ped_multiplication, verify_ped_range,
    verify_plaintext_knowledge, verify_valid_query,
};
use octopus_harness::bench;
use octopus_harness::config::NoiseMode;
use octopus_harness::scenario::Scenario;
use octopus_harness::{run_scenario, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Criteria that cannot be met by a faithful implementation; see README.
const KNOWN_UNMET: &[u32] = &[4];

const ZK_TRIALS: usize = 1000;
const CTX: &[u8] = b"acceptance";

type Check = fn() -> Result<String, String>;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn keys512() -> &'static (PaillierPublicKey, PaillierSecretKey) {
    static KEYS: OnceLock<(PaillierPublicKey, PaillierSecretKey)> = OnceLock::new();
    KEYS.get_or_init(|| paillier_keygen(512, &mut rng(0xacce)).expect("keygen"))
}

fn shape(dims: &[usize]) -> QueryShape {
    QueryShape::new(dims.to_vec()).expect("valid shape")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. Sparse responder against the dense reference and a plain lookup.

fn pir_oracle() -> Result<String, String> {
    let (pk, sk) = keys512();
    let mut r = rng(1);
    let payload_len = 16;
    let started = Instant::now();
    let mut checked = 0;
    for dims in [&[2, 2][..], &[3, 4], &[2, 2, 2], &[4, 4]] {
        let shape = shape(dims);
        for s in 1..=shape.d() {
            for trial in 0..100 {
                let density: f64 = r.gen_range(0.0..=1.0);
                let mut db = SparseDatabase::new(shape.clone(), payload_len);
                let mut dense = Vec::with_capacity(shape.capacity());
                for pid in 0..shape.capacity() {
                    if r.gen_bool(density) {
                        let payload: Vec<u8> = (0..payload_len).map(|_| r.gen_range(1..=255)).collect();
                        db.insert(pid, payload.clone()).map_err(|e| e.to_string())?;
                        dense.push(DenseSlot::Payload(payload));
                    } else {
                        dense.push(DenseSlot::Zero);
                    }
                }
                let target = r.gen_range(0..shape.capacity());
                let (query, _) = gen_query(pk, &shape, target, &mut r).map_err(|e| e.to_string())?;
                let sparse = sparse_respond(pk, &query, &db, s, &mut r).map_err(|e| e.to_string())?;
                let naive = naive_respond(pk, &query, &dense, payload_len, s, &mut r).map_err(|e| e.to_string())?;
                let here = || format!("shape {shape}, s={s}, trial {trial}, target {target}");
                let (sparse, naive) = match (sparse, naive) {
                    (RespondOutcome::Response(a), RespondOutcome::Response(b)) => (
                        decrypt_response(sk, &a, payload_len).map_err(|e| e.to_string())?,
                        decrypt_response(sk, &b, payload_len).map_err(|e| e.to_string())?,
                    ),
                    (RespondOutcome::EmptySentinel, RespondOutcome::EmptySentinel) => {
                        ensure(db.is_empty(), || format!("{}: sentinel for a non-empty db", here()))?;
                        checked += 1;
                        continue;
                    }
                    _ => return Err(format!("{}: one responder returned the sentinel", here())),
                };
                ensure(sparse == naive, || format!("{}: {sparse:?} != {naive:?}", here()))?;
                match (db.get(target), &sparse) {
                    (Some(want), Decrypted::Payload(got)) => {
                        ensure(want == got.as_slice(), || format!("{}: wrong payload", here()))?
                    }
                    (None, Decrypted::Zero(_)) => {}
                    _ => return Err(format!("{}: lookup disagrees with {sparse:?}", here())),
                }
                checked += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:.1?}"))?;
    Ok(format!("{checked} databases identical, {:.1} s", elapsed.as_secs_f64()))
}

// 2. The three sparse layouts of a 3x4 array queried at row 2, column 3.

fn taxonomy() -> Result<String, String> {
    let (pk, sk) = keys512();
    let pp = PedersenParams::for_key_bits(pk.bit_length()).map_err(|e| e.to_string())?;
    let width = pp.element_width();
    let mut r = rng(2);
    let shape = shape(&[3, 4]);
    let target = shape.coords_to_pid(&[1, 2]).map_err(|e| e.to_string())?;
    let layouts: [(&str, &[usize], ResponseType); 3] = [
        ("target empty, column occupied", &[0, 2, 5, 11], ResponseType::TypeD),
        ("column empty", &[0, 1, 5, 7, 11], ResponseType::TypeI(1)),
        ("array empty", &[], ResponseType::TypeD),
    ];
    let mut seen = Vec::new();
    for (name, occupied, want) in layouts {
        let mut db = SparseDatabase::new(shape.clone(), width);
        for &pid in occupied {
            let c = pp.commit(&big(pid as u64 + 1), &pp.random_scalar(&mut r));
            db.insert(pid, c.to_payload(&pp)).map_err(|e| e.to_string())?;
        }
        let (query, _) = gen_query(pk, &shape, target, &mut r).map_err(|e| e.to_string())?;
        let response = match sparse_respond(pk, &query, &db, 2, &mut r).map_err(|e| e.to_string())? {
            RespondOutcome::Response(resp) => resp,
            RespondOutcome::EmptySentinel => {
                empty_sentinel_response(pk, width, 2, &mut r).map_err(|e| e.to_string())?
            }
        };
        let (got, _) = classify_response(sk, &response, 2, &pp, 1).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("{name}: {got} instead of {want}"))?;
        seen.push(got.to_string());
    }
    Ok(seen.join(" / "))
}

// 3. Noise calibration.

/// Mean of `⌈max(0, X)⌉` by Simpson integration of the Laplace density over
/// each unit interval.
fn integrated_mean(mu: f64, lambda: f64) -> f64 {
    let density = |x: f64| (-(x - mu).abs() / lambda).exp() / (2.0 * lambda);
    let simpson = |a: f64, b: f64| {
        let n = 64;
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| density(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
        (density(a) + density(b) + inner) * h / 3.0
    };
    // The density has a kink at mu; split the interval containing it.
    let mass = |a: f64, b: f64| {
        if a < mu && mu < b {
            simpson(a, mu) + simpson(mu, b)
        } else {
            simpson(a, b)
        }
    };
    let upper = (mu.max(0.0) + 60.0 * lambda).ceil() as u64;
    (1..=upper).map(|k| k as f64 * mass(k as f64 - 1.0, k as f64)).sum()
}

fn calibration() -> Result<String, String> {
    let (epsilon, delta) = (0.7, 1e-4);
    let (mu, lambda) = derive_laplace_params(epsilon, delta).map_err(|e| e.to_string())?;
    let t = ((1.0 - mu) / lambda).exp();
    let eps_back = 2.0 / lambda;
    let delta_back = t * (1.0 - t / 4.0);
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    ensure(rel(eps_back, epsilon) <= 1e-9, || format!("epsilon back-substitutes to {eps_back}"))?;
    ensure(rel(delta_back, delta) <= 1e-9, || format!("delta back-substitutes to {delta_back}"))?;
    let (eps_lib, delta_lib) = privacy_of(mu, lambda);
    ensure(rel(eps_lib, epsilon) <= 1e-9 && rel(delta_lib, delta) <= 1e-9, || {
        format!("library guarantee ({eps_lib}, {delta_lib})")
    })?;

    let integrated = integrated_mean(mu, lambda);
    ensure(rel(ceiled_mean(mu, lambda), integrated) <= 1e-6, || {
        format!("series mean {} vs integral {integrated}", ceiled_mean(mu, lambda))
    })?;
    let mut r = rng(3);
    let draws = 1_000_000u64;
    let total: u64 = (0..draws).map(|_| sample_truncated_laplace(mu, lambda, &mut r)).sum();
    let empirical = total as f64 / draws as f64;
    ensure(rel(empirical, integrated) <= 0.02, || {
        format!("empirical mean {empirical:.4} vs {integrated:.4}")
    })?;
    Ok(format!(
        "mu={mu:.4} lambda={lambda:.4}, mean {empirical:.4} vs {integrated:.4} ({:+.2}%)",
        100.0 * (empirical - integrated) / integrated
    ))
}

// 4. Which slots can change a target's response type.

fn influence_counts(pk: &PaillierPublicKey, sk: &PaillierSecretKey, s: usize) -> Result<Vec<usize>, String> {
    let shape = shape(&[2, 2, 2]);
    let payload_len = 4;
    let mut r = rng(4 + s as u64);
    let m = shape.capacity();
    let mut counts = Vec::with_capacity(m);
    for target in 0..m {
        let (query, _) = gen_query(pk, &shape, target, &mut r).map_err(|e| e.to_string())?;
        let mut types = Vec::with_capacity(1 << m);
        for pattern in 0u32..(1 << m) {
            let mut db = SparseDatabase::new(shape.clone(), payload_len);
            for pid in (0..m).filter(|p| pattern >> p & 1 == 1) {
                db.insert(pid, vec![pid as u8 + 1; payload_len]).map_err(|e| e.to_string())?;
            }
            let t = match sparse_respond(pk, &query, &db, s, &mut r).map_err(|e| e.to_string())? {
                RespondOutcome::Response(resp) => decrypt_response(sk, &resp, payload_len)
                    .map_err(|e| e.to_string())?
                    .response_type(shape.d()),
                RespondOutcome::EmptySentinel => ResponseType::TypeD,
            };
            types.push(t);
        }
        let influencing = (0..m)
            .filter(|j| (0..1usize << m).any(|p| types[p] != types[p ^ (1 << j)]))
            .count();
        counts.push(influencing);
    }
    Ok(counts)
}

fn influence() -> Result<String, String> {
    let (pk, sk) = keys512();
    let at1 = influence_counts(pk, sk, 1)?;
    let at3 = influence_counts(pk, sk, 3)?;
    let summary = format!("s=1 max {}, s=3 max {}", at1.iter().max().unwrap(), at3.iter().max().unwrap());
    ensure(at1.iter().all(|&l| l <= 1), || format!("{summary}; s=1 counts {at1:?}"))?;
    ensure(at3.iter().all(|&l| l <= 4), || format!("{summary}; s=3 counts {at3:?} exceed 4"))?;
    Ok(summary)
}

// 5. Proof systems.

struct Tally {
    accepted: usize,
    rejected: usize,
}

fn zk_suite() -> Result<String, String> {
    let (pk, _) = keys512();
    let pp = PedersenParams::for_key_bits(pk.bit_length()).map_err(|e| e.to_string())?;
    let mut r = rng(5);
    let mut lines = Vec::new();
    let mut record = |name: &str, t: Tally| -> Result<(), String> {
        ensure(t.accepted == ZK_TRIALS && t.rejected == ZK_TRIALS, || {
            format!("{name}: completeness {}/{ZK_TRIALS}, soundness {}/{ZK_TRIALS}", t.accepted, t.rejected)
        })?;
        lines.push(name.to_string());
        Ok(())
    };

    let mut t = Tally { accepted: 0, rejected: 0 };
    for i in 0..ZK_TRIALS {
        let x = BigUint::from(r.gen::<u64>());
        let rr = pk.random_unit(&mut r);
        let c = pk.encrypt_with(&x, &rr).map_err(|e| e.to_string())?;
        let p = prove_plaintext_knowledge(pk, &c, &x, &rr, CTX, &mut r);
        t.accepted += usize::from(verify_plaintext_knowledge(pk, &c, &p, CTX));
        let forged = match i % 3 {
            0 => {
                let p = prove_plaintext_knowledge(pk, &c, &(&x + 1u32), &rr, CTX, &mut r);
                verify_plaintext_knowledge(pk, &c, &p, CTX)
            }
            1 => {
                let p = prove_plaintext_knowledge(pk, &c, &x, &pk.random_unit(&mut r), CTX, &mut r);
                verify_plaintext_knowledge(pk, &c, &p, CTX)
            }
            _ => {
                let other = pk.encrypt(&x, &mut r).map_err(|e| e.to_string())?;
                verify_plaintext_knowledge(pk, &other, &p, CTX)
            }
        };
        t.rejected += usize::from(!forged);
    }
    record("plaintext-knowledge", t)?;

    let mut t = Tally { accepted: 0, rejected: 0 };
    for _ in 0..ZK_TRIALS {
        let bit = big(r.gen_range(0..=1));
        let rr = pk.random_unit(&mut r);
        let c = pk.encrypt_with(&bit, &rr).map_err(|e| e.to_string())?;
        t.accepted += usize::from(verify_binary(pk, &c, &prove_binary(pk, &c, &bit, &rr, CTX, &mut r), CTX));
        let bad = if r.gen_bool(0.5) { big(r.gen_range(2..1 << 20)) } else { pk.n() - 1u32 };
        let c = pk.encrypt_with(&bad, &rr).map_err(|e| e.to_string())?;
        let claimed = big(r.gen_range(0..=1));
        t.rejected += usize::from(!verify_binary(pk, &c, &prove_binary(pk, &c, &claimed, &rr, CTX, &mut r), CTX));
    }
    record("binary", t)?;

    let shape22 = shape(&[2, 2]);
    let mut t = Tally { accepted: 0, rejected: 0 };
    for _ in 0..ZK_TRIALS {
        let (q, w) = gen_query(pk, &shape22, r.gen_range(0..4), &mut r).map_err(|e| e.to_string())?;
        let p = prove_valid_query(pk, &q, &w, CTX, &mut r).map_err(|e| e.to_string())?;
        t.accepted += usize::from(verify_valid_query(pk, &q, &p, CTX));

        let mut rows = vec![vec![big(0), big(0)], vec![big(0), big(0)]];
        for row in rows.iter_mut() {
            row[r.gen_range(0..2)] = big(1);
        }
        let dim = r.gen_range(0..2);
        rows[dim] = match r.gen_range(0..4) {
            0 => vec![big(1), big(1)],
            1 => vec![big(0), big(0)],
            2 => vec![big(2), pk.n() - 1u32],
            _ => vec![big(r.gen_range(2..1000)), big(0)],
        };
        let (bad_q, bad_w) = gen_query_with_plaintexts(pk, &shape22, rows, &mut r).map_err(|e| e.to_string())?;
        let accepted = match prove_valid_query(pk, &bad_q, &bad_w, CTX, &mut r) {
            Ok(bad_p) => verify_valid_query(pk, &bad_q, &bad_p, CTX) || verify_valid_query(pk, &bad_q, &p, CTX),
            Err(_) => verify_valid_query(pk, &bad_q, &p, CTX),
        };
        t.rejected += usize::from(!accepted);
    }
    record("valid-query", t)?;

    let mut t = Tally { accepted: 0, rejected: 0 };
    for _ in 0..ZK_TRIALS {
        let dataset: Vec<BigUint> = (0..4).map(|_| BigUint::from(r.gen::<u128>())).collect();
        let pid = r.gen_range(0..4);
        let (q, w) = gen_query(pk, &shape22, pid, &mut r).map_err(|e| e.to_string())?;
        let r_c = pk.random_unit(&mut r);
        let c = pk.encrypt_with(&dataset[pid], &r_c).map_err(|e| e.to_string())?;
        let p = prove_correspondence(pk, &q, &w, pid, &c, &r_c, &dataset, CTX, &mut r).map_err(|e| e.to_string())?;
        t.accepted += usize::from(verify_correspondence(pk, &q, &c, &dataset, &p, CTX));
        let wrong = if r.gen_bool(0.5) {
            dataset[(pid + r.gen_range(1..4)) % 4].clone()
        } else {
            BigUint::from(r.gen::<u128>())
        };
        let c = pk.encrypt_with(&wrong, &r_c).map_err(|e| e.to_string())?;
        let p = prove_correspondence(pk, &q, &w, pid, &c, &r_c, &dataset, CTX, &mut r).map_err(|e| e.to_string())?;
        t.rejected += usize::from(!verify_correspondence(pk, &q, &c, &dataset, &p, CTX));
    }
    record("correspondence", t)?;

    let mut t = Tally { accepted: 0, rejected: 0 };
    for _ in 0..ZK_TRIALS {
        let (x, y) = (big(r.gen_range(0..1 << 20)), big(r.gen_range(0..1 << 20)));
        let (rx, ry, rz) = (pp.random_scalar(&mut r), pp.random_scalar(&mut r), pp.random_scalar(&mut r));
        let (cx, cy) = (pp.commit(&x, &rx), pp.commit(&y, &ry));
        let cz = pp.commit(&(&x * &y), &rz);
        let p = prove_ped_multiplication(&pp, &cx, &cy, &cz, (&x, &rx), (&y, &ry), &rz, CTX, &mut r);
        t.accepted += usize::from(verify_ped_multiplication(&pp, &cx, &cy, &cz, &p, CTX));
        let off = &x * &y + big(r.gen_range(1..1 << 20));
        let cz = pp.commit(&off, &rz);
        let p = prove_ped_multiplication(&pp, &cx, &cy, &cz, (&x, &rx), (&y, &ry), &rz, CTX, &mut r);
        t.rejected += usize::from(!verify_ped_multiplication(&pp, &cx, &cy, &cz, &p, CTX));
    }
    record("multiplication", t)?;

    let bits = 8;
    let mut t = Tally { accepted: 0, rejected: 0 };
    for _ in 0..ZK_TRIALS {
        let rr = pp.random_scalar(&mut r);
        let x = big(r.gen_range(0..1 << bits));
        let c = pp.commit(&x, &rr);
        let p = prove_ped_range(&pp, &c, &x, &rr, bits, CTX, &mut r).map_err(|e| e.to_string())?;
        t.accepted += usize::from(verify_ped_range(&pp, &c, bits, &p, CTX));
        let x = big(r.gen_range(1 << bits..1 << (bits + 4)));
        let c = pp.commit(&x, &rr);
        let p = prove_ped_range(&pp, &c, &x, &rr, bits, CTX, &mut r).map_err(|e| e.to_string())?;
        t.rejected += usize::from(!verify_ped_range(&pp, &c, bits, &p, CTX));
    }
    record("range", t)?;

    // Every (target, secret) pair on a 2x2 dataset: accept exactly on the diagonal.
    let dataset: Vec<BigUint> = (0..4).map(|_| BigUint::from(r.gen::<u128>())).collect();
    let mut cases = 0;
    for pid in 0..4 {
        let (q, w) = gen_query(pk, &shape22, pid, &mut r).map_err(|e| e.to_string())?;
        for secret in 0..4 {
            let r_c = pk.random_unit(&mut r);
            let c = pk.encrypt_with(&dataset[secret], &r_c).map_err(|e| e.to_string())?;
            let p = prove_correspondence(pk, &q, &w, pid, &c, &r_c, &dataset, CTX, &mut r)
                .map_err(|e| e.to_string())?;
            let ok = verify_correspondence(pk, &q, &c, &dataset, &p, CTX);
            ensure(ok == (pid == secret), || format!("correspondence target {pid} secret {secret}: {ok}"))?;
            cases += 1;
        }
    }
    Ok(format!("{}; {ZK_TRIALS}+{ZK_TRIALS} trials each; {cases} exhaustive 2x2 cases", lines.join(", ")))
}

// Sessions on small generated consortia.

fn session_scenario(seed: u64, kind: QueryKind, flags: AdversaryFlags) -> Result<Scenario, String> {
    let mut r = rng(seed);
    let dims = [[2, 2], [2, 3], [3, 2]][r.gen_range(0..3)];
    let cfg = ScenarioConfig {
        lenders: r.gen_range(1..=3),
        shape: shape(&dims),
        sparsity: r.gen_range(0.2..=0.9),
        kind,
        key_bits: 512,
        adversary: flags,
        seed,
        noise: NoiseMode::Fixed(1),
        borrower_pid: r.gen_range(0..dims[0] * dims[1]),
        max_amount: r.gen_range(1..=2000),
        date: Some("2024-06-01".into()),
        ..ScenarioConfig::default()
    };
    Scenario::with_key(&cfg, keys512().1.clone()).map_err(|e| e.to_string())
}

fn run_session(sc: &Scenario) -> Result<SessionReport, String> {
    let noise = sc.noise_source().map_err(|e| e.to_string())?;
    run_octopus(&sc.registry, &sc.sk, noise, &sc.session_config(), sc.config.transport).map_err(|e| e.to_string())
}

fn responses_reached_originator(report: &SessionReport) -> bool {
    report
        .transcript
        .entries
        .iter()
        .any(|e| e.to == Party::Originator && (e.tag == TAG_RESPONSES || e.tag == TAG_LENDER_RESPONSE))
}

fn random_kind<R: Rng>(r: &mut R) -> QueryKind {
    match r.gen_range(0..4) {
        0 => QueryKind::Sum,
        1 => QueryKind::Count,
        2 => QueryKind::Variance,
        _ => QueryKind::CmpPublic(r.gen_range(1..4000)),
    }
}

/// The result computed directly from the borrower's loans.
fn plaintext(kind: QueryKind, amounts: &[u64], lenders: u64) -> Option<QueryResult> {
    let total: u64 = amounts.iter().sum();
    Some(match kind {
        QueryKind::Sum => QueryResult::Sum(big(total)),
        QueryKind::Count => QueryResult::Count(big(amounts.len() as u64)),
        QueryKind::Variance => {
            let squares: u64 = amounts.iter().map(|a| a * a).sum();
            QueryResult::Variance {
                numerator: big(lenders * squares - total * total),
                denominator: lenders * lenders,
            }
        }
        QueryKind::CmpPublic(t) => QueryResult::Below(total < t),
        QueryKind::CmpPrivate => return None,
    })
}

// 6. Consistency check.

fn toy_trace() -> Result<(), String> {
    let pp = PedersenParams::new(big(23), big(11), big(4), big(9)).map_err(|e| e.to_string())?;
    let c = pp.mul(&pp.commit(&big(3), &big(5)), &pp.commit(&big(0), &big(2)));
    ensure(c.value() == &big(3), || format!("c = {}", c.value()))?;
    let (r_b, r_o, r_i, r_z) = (big(7), big(4), big(5), big(2));
    let delta_rb = pp.sub_scalar(&pp.sub_scalar(&r_b, &r_o), &r_i);
    let delta_r = pp.sub_scalar(&delta_rb, &r_z);
    ensure(delta_r == big(7), || format!("delta r = {delta_r}"))?;
    let c_b = pp.commit(&big(3), &r_b);
    let check = pp.mul(&c, &pp.commit(&big(0), &pp.add_scalar(&delta_r, &r_o)));
    ensure(check == c_b, || "toy consistency check fails".into())
}

fn consistency() -> Result<String, String> {
    toy_trace()?;
    let mut r = rng(6);
    let trials = 100;
    let (mut honest, mut caught) = (0, 0);
    for i in 0..trials {
        let kind = random_kind(&mut r);
        let report = run_session(&session_scenario(6_000 + i, kind, AdversaryFlags::default())?)?;
        honest += usize::from(report.outcome.is_ok() && report.verdicts.z3 == Some(true));
        let flags = AdversaryFlags { lie_sum: true, ..Default::default() };
        let report = run_session(&session_scenario(6_500 + i, kind, flags)?)?;
        caught += usize::from(report.outcome == Err(AbortKind::InconsistentSum) && report.verdicts.z3 == Some(false));
    }
    ensure(honest == trials as usize && caught == trials as usize, || {
        format!("honest {honest}/{trials}, lie-sum caught {caught}/{trials}")
    })?;
    Ok(format!("toy trace c=3 dr=7 pass; honest {honest}/{trials}; lie-sum caught {caught}/{trials}"))
}

// 7. Authorization gates.

fn gating() -> Result<String, String> {
    let mut r = rng(7);
    let trials = 100;
    let mut line = Vec::new();
    for (name, flags, want) in [
        ("impostor", AdversaryFlags { impostor: true, ..Default::default() }, AbortKind::Unauthorized),
        ("bad-query", AdversaryFlags { bad_query: true, ..Default::default() }, AbortKind::InvalidQuery),
    ] {
        let mut ok = 0;
        for i in 0..trials {
            let seed = 7_000 + r.gen::<u32>() as u64;
            let report = run_session(&session_scenario(seed, random_kind(&mut r), flags)?)?;
            let gated = report.outcome == Err(want) && !responses_reached_originator(&report);
            ensure(gated, || format!("{name} trial {i}: {:?}", report.outcome))?;
            ok += 1;
        }
        line.push(format!("{name} {ok}/{trials} {want}"));
    }
    Ok(line.join(", "))
}

// 8. Serialized sizes at 1024-bit keys.

fn sizes() -> Result<String, String> {
    let mut r = rng(8);
    let (pk, _) = paillier_keygen(1024, &mut r).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (dims, target) in [(&[10, 10, 10, 10][..], 10_400.0), (&[100, 100], 51_500.0)] {
        let row = bench::measure(&pk, &shape(dims), &mut r).map_err(|e| e.to_string())?;
        let err = (row.query_bytes as f64 - target) / target;
        ensure(err.abs() <= 0.10, || format!("{}: {} B vs {target} B", row.shape, row.query_bytes))?;
        ensure(row.exact(), || format!("{}: measured sizes differ from model plus framing: {row:?}", row.shape))?;
        out.push(format!("{} query {} B ({:+.1}%)", row.shape, row.query_bytes, 100.0 * err));
    }
    Ok(out.join(", "))
}

// 9. Released results against the plaintext.

fn evaluation() -> Result<String, String> {
    let mut r = rng(9);
    let trials = 200;
    let mut kinds = BTreeSet::new();
    for i in 0..trials {
        let kind = random_kind(&mut r);
        let sc = session_scenario(9_000 + i, kind, AdversaryFlags::default())?;
        let want = plaintext(kind, &sc.borrower_amounts(), u64::from(sc.config.lenders));
        let report = run_session(&sc)?;
        ensure(report.outcome.as_ref().ok() == want.as_ref(), || {
            format!("session {i} ({kind}): {:?} vs {want:?}", report.outcome)
        })?;
        kinds.insert(kind.to_string().split('(').next().unwrap_or_default().to_string());
    }

    let mut cfg = ScenarioConfig {
        lenders: 2,
        shape: shape(&[2, 2]),
        sparsity: 0.0,
        kind: QueryKind::Variance,
        key_bits: 512,
        noise: NoiseMode::Fixed(1),
        borrower_pid: 1,
        date: Some("2024-06-01".into()),
        ..ScenarioConfig::default()
    };
    let sc = Scenario::with_key(&cfg, keys512().1.clone()).map_err(|e| e.to_string())?;
    {
        let mut reg = sc.registry.write().map_err(|e| e.to_string())?;
        reg.record_loan("user-1", 1, 1, &mut r).map_err(|e| e.to_string())?;
        reg.record_loan("user-1", 2, 2, &mut r).map_err(|e| e.to_string())?;
    }
    let variance = run_session(&sc)?.outcome.map_err(|k| format!("variance example aborted: {k}"))?;
    ensure(variance.as_f64() == 0.25, || format!("variance of [1, 2] is {variance}"))?;

    cfg.kind = QueryKind::CmpPrivate;
    let sc = Scenario::with_key(&cfg, keys512().1.clone()).map_err(|e| e.to_string())?;
    let private = run_session(&sc)?.outcome;
    ensure(private == Err(AbortKind::UnsupportedQuery), || format!("cmp_private gave {private:?}"))?;
    Ok(format!(
        "{trials} sessions ({}) match; variance [1,2] = {}; cmp_private unsupported",
        kinds.into_iter().collect::<Vec<_>>().join("/"),
        variance.as_f64()
    ))
}

// 10. Default scenario.

fn smoke() -> Result<String, String> {
    let cfg = ScenarioConfig {
        date: Some("2024-06-01".into()),
        ..ScenarioConfig::default()
    };
    let started = Instant::now();
    let first = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure(first.correct() == Some(true), || format!("default scenario gave {:?}", first.outcome))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:.1?}"))?;
    let second = run_scenario(&cfg).map_err(|e| e.to_string())?;
    ensure(first.transcript == second.transcript && first.outcome == second.outcome, || {
        "replay under the same seed differs".into()
    })?;
    Ok(format!(
        "{} lenders, {}-bit key, {:.1} s, replay identical ({} bytes)",
        cfg.lenders,
        cfg.key_bits,
        elapsed.as_secs_f64(),
        first.transcript.len()
    ))
}

fn main() -> ExitCode {
    let mut criteria: Vec<(u32, &str, Check)> = vec![
        (1, "pir oracle equivalence", pir_oracle),
        (2, "response taxonomy", taxonomy),
        (3, "noise calibration", calibration),
        (4, "influence bound", influence),
        (5, "proof suites", zk_suite),
        (6, "consistency check", consistency),
        (7, "authorization gating", gating),
        (8, "serialized sizes", sizes),
        (9, "evaluation correctness", evaluation),
        (10, "end-to-end smoke", smoke),
    ];
    // `cargo test -- <filter>` runs the criteria whose number or name matches.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() {
        criteria.retain(|(n, name, _)| filters.iter().any(|f| *f == n.to_string() || name.contains(f.as_str())));
    }

    let mut unexpected = 0;
    let mut failed = 0;
    for (n, name, check) in criteria {
        let started = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        let known = KNOWN_UNMET.contains(&n);
        match (result, known) {
            (Ok(detail), false) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1} s]"),
            (Ok(detail), true) => {
                unexpected += 1;
                println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1} s] (listed as unmet; update KNOWN_UNMET)");
            }
            (Err(why), known) => {
                failed += 1;
                if !known {
                    unexpected += 1;
                }
                let tag = if known { " (known)" } else { "" };
                println!("criterion {n:>2} FAIL{tag}  {name}: {why} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {failed} failing, {unexpected} unexpected");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
