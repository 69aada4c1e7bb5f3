//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Run with `cargo test -p ftsynth-core --test acceptance`.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::process::ExitCode;
use std::time::Instant;

use rand_core::RngCore;

use ftsynth::bench::{
    fit_scaling, phase_curve, phase_target, sample_random_target, scaling_experiment, target_rng,
    verify_fixture, Fixture, ScalingConfig,
};
use ftsynth::canondb::{
    build_canon_db, decode_db, encode_db, is_canonical, load_db, save_db, seq_order_next, CanonDb,
};
use ftsynth::gateset::{build_group_table, clifford_matrix, evaluate, GateSeq, CLIFFORD_ORDER};
use ftsynth::search::{
    convergence_curve_with, search_exhaustive, search_optimal, search_optimal_with,
    ConvergenceRecord, SearchOptions,
};
use ftsynth::unitary::{distance, same_up_to_phase, triangle_check, Unitary2, UNIQUENESS_EPS};

type Check = Result<String, String>;
type Part<'a> = (&'a str, &'a dyn Fn() -> Result<(), String>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1() -> Check {
    let mut worst = 0f64;
    for d in 1..=10u32 {
        let got = distance(&phase_target(d), &Unitary2::IDENTITY).value();
        let want = SQRT_2 * (PI / 2f64.powi(d as i32 + 2)).sin();
        let err = (got - want).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12, || {
            format!("d={d}: {got:e} vs closed form {want:e}")
        })?;
    }
    let d7 = distance(&phase_target(7), &Unitary2::IDENTITY).value();
    ensure((d7 - 8.6775e-3).abs() < 5e-8, || {
        format!("d=7 gives {d7:e}")
    })?;
    ensure(format!("{d7:.1e}") == "8.7e-3", || {
        format!("d=7 rounds to {d7:.1e}")
    })?;
    Ok(format!("d=1..10 max err {worst:.1e}, d=7 -> {d7:.6e}"))
}

fn ac2() -> Check {
    let table = build_group_table().map_err(|e| e.to_string())?;
    for i in 0..CLIFFORD_ORDER {
        let mut row = [false; CLIFFORD_ORDER];
        let mut col = [false; CLIFFORD_ORDER];
        for j in 0..CLIFFORD_ORDER {
            let k = table.product(i, j);
            let p = *clifford_matrix(i) * *clifford_matrix(j);
            ensure(
                distance(&p, clifford_matrix(k)).value() < UNIQUENESS_EPS,
                || format!("G{i}*G{j} is not G{k}"),
            )?;
            row[k] = true;
            col[table.product(j, i)] = true;
        }
        ensure(row.iter().all(|&b| b), || {
            format!("row {i} is not a permutation")
        })?;
        ensure(col.iter().all(|&b| b), || {
            format!("column {i} is not a permutation")
        })?;
    }
    Ok("24x24 table closed, Latin square".into())
}

fn ac3() -> Check {
    let u31 = verify_fixture(Fixture::U31).map_err(|e| e.to_string())?;
    let u46 = verify_fixture(Fixture::U46).map_err(|e| e.to_string())?;
    ensure(u31.length == 31, || format!("U31 has {} gates", u31.length))?;
    ensure(u46.length == 46, || format!("U46 has {} gates", u46.length))?;
    ensure(u31.dist < 8.6775e-3 && u31.beats_identity, || {
        format!("U31 dist {:e} does not beat the identity", u31.dist)
    })?;
    ensure(u31.within_tolerance, || {
        format!("U31 dist {:e} not within 10% of 8.1e-3", u31.dist)
    })?;
    ensure(u46.within_tolerance, || {
        format!("U46 dist {:e} not within 10% of 7.5e-4", u46.dist)
    })?;
    Ok(format!(
        "U31 len 31 dist {:.4e} (T={}), U46 len 46 dist {:.4e} (T={})",
        u31.dist, u31.t_count, u46.dist, u46.t_count
    ))
}

fn ac4() -> Check {
    let started = Instant::now();
    let mut compared = 0;
    for (lmax, lprime) in [(3usize, 1usize), (4, 2), (4, 3)] {
        let db = build_canon_db(lprime).map_err(|e| e.to_string())?;
        for i in 0..100u64 {
            let (u, ..) = sample_random_target(&mut target_rng(4, i));
            let fast = search_optimal(&u, lmax, &db).map_err(|e| e.to_string())?;
            let slow = search_exhaustive(&u, lmax).map_err(|e| e.to_string())?;
            ensure(
                fast.best_dist.value().to_bits() == slow.best_dist.value().to_bits(),
                || {
                    format!(
                        "target {i} (lmax {lmax}, l' {lprime}): {:e} vs exhaustive {:e}",
                        fast.best_dist.value(),
                        slow.best_dist.value()
                    )
                },
            )?;
            ensure(fast.best_seq == slow.best_seq, || {
                format!(
                    "target {i} (lmax {lmax}, l' {lprime}): `{}` vs `{}`",
                    fast.best_seq, slow.best_seq
                )
            })?;
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} searches bit-equal to exhaustive in {:.1}s",
        started.elapsed().as_secs_f64()
    ))
}

fn ac5(db: &CanonDb) -> Check {
    let target = phase_target(7);
    let identity = distance(&target, &Unitary2::IDENTITY).value();
    let r = search_optimal(&target, 15, db).map_err(|e| e.to_string())?;
    let got = r.best_dist.value();
    ensure((got - identity).abs() <= 1e-15, || {
        format!("best at lmax 15 is {got:e}, identity {identity:e}")
    })?;
    ensure((got - 8.6775e-3).abs() < 5e-8, || {
        format!("best at lmax 15 is {got:e}")
    })?;
    Ok(format!(
        "lmax 15 best {got:.6e} = identity, {} visited, {:.3}s",
        r.sequences_visited,
        r.wall_time.as_secs_f64()
    ))
}

/// Full search up to the first improving length.
fn ac5_full(db: &CanonDb) -> Check {
    let target = phase_target(7);
    let identity = distance(&target, &Unitary2::IDENTITY).value();
    let r = search_optimal(&target, 31, db).map_err(|e| e.to_string())?;
    let below = r.best_up_to(30);
    ensure((below.dist.value() - identity).abs() <= 1e-15, || {
        format!(
            "length {} beats the identity: {:e}",
            below.seq.len(),
            below.dist.value()
        )
    })?;
    ensure(
        r.best_dist.value() < identity && r.best_seq.len() == 31,
        || {
            format!(
                "lmax 31 best {:e} at length {}",
                r.best_dist.value(),
                r.best_seq.len()
            )
        },
    )?;
    let published = Fixture::U31.sequence().map_err(|e| e.to_string())?;
    ensure(r.best_seq == published, || {
        format!("lmax 31 best `{}` differs from U31", r.best_seq)
    })?;
    Ok(format!(
        "no l <= 30 beats identity; lmax 31 returns U31 ({:.4e}) in {:.2}s",
        r.best_dist.value(),
        r.wall_time.as_secs_f64()
    ))
}

fn ac6(db: &CanonDb) -> Check {
    let rows: Vec<(usize, f64)> = (4..=15)
        .map(|l| (l, 0.292 * 10f64.powf(-0.0511 * l as f64)))
        .collect();
    let self_fit = fit_scaling(&rows, 1).map_err(|e| e.to_string())?;
    ensure(
        (self_fit.a - 0.292).abs() <= 1e-12 && (self_fit.b + 0.0511).abs() <= 1e-12,
        || format!("self-fit gives a={:e} b={:e}", self_fit.a, self_fit.b),
    )?;

    let mut config = ScalingConfig::new(50, 15, 42);
    config.fit_range = (4, 15);
    let out = scaling_experiment(&config, db).map_err(|e| e.to_string())?;
    let fit = out.fit;
    let b_ok = fit.b <= -0.0511 * 0.75 && fit.b >= -0.0511 * 1.25;
    let a_ok = fit.a >= 0.292 / 2.0 && fit.a <= 0.292 * 2.0;
    ensure(b_ok && a_ok, || {
        format!("fit a={:.4} b={:.5}", fit.a, fit.b)
    })?;
    Ok(format!(
        "a={:.4} b={:.5} (rms {:.3}) over l=4..15, 50 targets; self-fit exact",
        fit.a, fit.b, fit.residual
    ))
}

fn random_unitary(rng: &mut impl RngCore) -> Unitary2 {
    let (u, ..) = sample_random_target(rng);
    u.with_global_phase((rng.next_u64() >> 11) as f64 * 2f64.powi(-53) * TAU)
}

fn metric_axioms() -> Result<(), String> {
    let mut rng = target_rng(7, 0);
    for n in 0..10_000 {
        let u = random_unitary(&mut rng);
        let v = random_unitary(&mut rng);
        let w = random_unitary(&mut rng);
        let duv = distance(&u, &v).value();
        let dvu = distance(&v, &u).value();
        ensure(distance(&u, &u).value() < 1e-15, || {
            format!("triple {n}: dist(u,u) > 0")
        })?;
        ensure((0.0..=1.0 + 1e-15).contains(&duv), || {
            format!("triple {n}: dist {duv} out of range")
        })?;
        ensure((duv - dvu).abs() < 1e-15, || {
            format!("triple {n}: not symmetric")
        })?;
        ensure(triangle_check(&u, &v, &w), || {
            format!("triple {n}: triangle inequality")
        })?;
        let phi = (rng.next_u64() >> 11) as f64 * 2f64.powi(-53) * TAU;
        let dphase = distance(&u.with_global_phase(phi), &v).value();
        ensure((dphase - duv).abs() < 1e-14, || {
            format!("triple {n}: phase changes the distance")
        })?;
        ensure(
            distance(&u, &u.with_global_phase(phi)).value() < 1e-14,
            || format!("triple {n}: u and e^(i phi) u differ"),
        )?;
    }
    Ok(())
}

/// All sequences of length at most 4 in order, keeping each that differs from
/// every earlier keeper.
fn naive_canonical(lmax: usize) -> Vec<(GateSeq, Unitary2)> {
    let mut kept: Vec<(GateSeq, Unitary2)> = Vec::new();
    let mut seq = Some(GateSeq::empty());
    while let Some(s) = seq {
        let u = evaluate(&s);
        if !kept
            .iter()
            .any(|(_, k)| distance(k, &u).value() < UNIQUENESS_EPS)
        {
            kept.push((s.clone(), u));
        }
        seq = seq_order_next(&s, lmax);
    }
    kept
}

fn canondb_oracle() -> Result<(), String> {
    let naive = naive_canonical(4);
    for lprime in 1..=4 {
        let db = build_canon_db(lprime).map_err(|e| e.to_string())?;
        let want: Vec<&(GateSeq, Unitary2)> =
            naive.iter().filter(|(s, _)| s.len() <= lprime).collect();
        ensure(db.len() == want.len(), || {
            format!(
                "l'={lprime}: {} entries, naive dedup has {}",
                db.len(),
                want.len()
            )
        })?;
        for (e, (s, u)) in db.entries().iter().zip(want) {
            ensure(&e.seq == s, || {
                format!("l'={lprime}: entry `{}` vs naive `{s}`", e.seq)
            })?;
            ensure(same_up_to_phase(&e.unitary, u), || {
                format!("l'={lprime}: matrix of `{s}` differs")
            })?;
        }
    }
    let db3 = build_canon_db(3).map_err(|e| e.to_string())?;
    let mut seq = Some(GateSeq::empty());
    while let Some(s) = seq {
        let naive_has = naive.iter().any(|(n, _)| n == &s);
        ensure(
            is_canonical(&s, &db3).map_err(|e| e.to_string())? == naive_has,
            || format!("is_canonical(`{s}`) disagrees with the naive set"),
        )?;
        seq = seq_order_next(&s, 3);
    }
    let entries = db3.entries();
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            ensure(
                distance(&a.unitary, &b.unitary).value() >= UNIQUENESS_EPS,
                || format!("`{}` and `{}` coincide", a.seq, b.seq),
            )?;
        }
    }
    Ok(())
}

fn canondb_spot_check(db: &CanonDb) -> Result<(), String> {
    let entries = db.entries();
    let mut rng = target_rng(11, 0);
    for _ in 0..20_000 {
        let i = (rng.next_u64() % entries.len() as u64) as usize;
        let j = (rng.next_u64() % entries.len() as u64) as usize;
        if i != j {
            ensure(
                distance(&entries[i].unitary, &entries[j].unitary).value() >= UNIQUENESS_EPS,
                || format!("`{}` and `{}` coincide", entries[i].seq, entries[j].seq),
            )?;
        }
        let found = db.find(&evaluate(&entries[i].seq)).map(|e| &e.seq);
        ensure(found == Some(&entries[i].seq), || {
            format!("find misses `{}`", entries[i].seq)
        })?;
    }
    Ok(())
}

fn monotone(curve: &[ConvergenceRecord]) -> Result<(), String> {
    for w in curve.windows(2) {
        ensure(w[1].dist.value() <= w[0].dist.value(), || {
            format!("{}: curve rises at l={}", w[1].target, w[1].l)
        })?;
    }
    Ok(())
}

fn curves(db: &CanonDb) -> Result<(), String> {
    for d in 1..=7 {
        monotone(&phase_curve(d, 14, db, SearchOptions::default()).map_err(|e| e.to_string())?)?;
    }
    for i in 0..10 {
        let (u, ..) = sample_random_target(&mut target_rng(5, i));
        monotone(
            &convergence_curve_with(&u, 14, db, SearchOptions::default())
                .map_err(|e| e.to_string())?,
        )?;
    }
    Ok(())
}

fn serial_vs_parallel(db: &CanonDb) -> Result<(), String> {
    let mut targets = vec![phase_target(7)];
    targets.extend((0..20).map(|i| sample_random_target(&mut target_rng(6, i)).0));
    for (n, u) in targets.iter().enumerate() {
        let lmax = if n == 0 { 21 } else { 13 };
        let serial =
            search_optimal_with(u, lmax, db, SearchOptions::serial()).map_err(|e| e.to_string())?;
        for shards in [0, 3] {
            let par = search_optimal_with(u, lmax, db, SearchOptions { shards })
                .map_err(|e| e.to_string())?;
            ensure(par.best_seq == serial.best_seq, || {
                format!(
                    "target {n}: shards {shards} gives `{}`, serial `{}`",
                    par.best_seq, serial.best_seq
                )
            })?;
            ensure(
                par.best_dist.value().to_bits() == serial.best_dist.value().to_bits(),
                || format!("target {n}: shards {shards} distance differs"),
            )?;
            ensure(
                par.optima_count == serial.optima_count
                    && par.sequences_visited == serial.sequences_visited,
                || format!("target {n}: shards {shards} counters differ"),
            )?;
        }
    }
    Ok(())
}

fn round_trip(db: &CanonDb) -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("canon.gfdb");
    save_db(db, &path).map_err(|e| e.to_string())?;
    let loaded = load_db(&path).map_err(|e| e.to_string())?;
    ensure(&loaded == db, || "loaded database differs".into())?;
    for (a, b) in loaded.entries().iter().zip(db.entries()) {
        ensure(
            a.unitary.to_f64s().map(f64::to_bits) == b.unitary.to_f64s().map(f64::to_bits),
            || format!("matrix of `{}` changed bits", a.seq),
        )?;
    }
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    ensure(encode_db(&loaded) == bytes, || {
        "re-encoding changes the file".into()
    })?;
    ensure(decode_db(&bytes).map_err(|e| e.to_string())? == *db, || {
        "decode differs".into()
    })?;
    Ok(())
}

fn ac7(db: &CanonDb) -> Check {
    let parts: [Part; 6] = [
        ("metric", &metric_axioms),
        ("canondb oracle l'<=4", &canondb_oracle),
        ("distinct l'=10", &|| canondb_spot_check(db)),
        ("monotone curves", &|| curves(db)),
        ("serial=parallel", &|| serial_vs_parallel(db)),
        ("save/load", &|| round_trip(db)),
    ];
    let mut done = Vec::new();
    for (name, f) in parts {
        f().map_err(|e| format!("{name}: {e}"))?;
        done.push(name);
    }
    Ok(done.join(", "))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let db = match build_canon_db(10) {
        Ok(db) => db,
        Err(e) => {
            println!("[FAIL] setup: building l'=10 database: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: [(&str, &str, &dyn Fn() -> Check); 8] = [
        ("AC1", "closed-form distances", &ac1),
        ("AC2", "Clifford group closure", &ac2),
        ("AC3", "fixture verification", &ac3),
        ("AC4", "skip search equals exhaustive", &ac4),
        ("AC5", "plateau at lmax 15", &|| ac5(&db)),
        ("AC5+", "full search to l=31", &|| ac5_full(&db)),
        ("AC6", "scaling law at reduced scale", &|| ac6(&db)),
        ("AC7", "property suites", &|| ac7(&db)),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {id} {title}: {detail} ({secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {title}: {detail} ({secs:.2}s)");
            }
        }
    }
    println!(
        "{} criteria, {failed} failed, {:.1}s",
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
