use nmsparse::theory::{
    fixed_nm_equal_density, memory_access_counts, performer_dense_crossover, performer_features,
    performer_nm_crossover, performer_speedup, speedup_fixed, speedup_nm, speedup_topk_bound,
    topk_break_even_density, topk_nm_equal_density, AttentionKind, CostModelParams,
};

use crate::error::CliError;
use crate::output::{csv_writer, num};
use crate::{SpeedupArgs, TrafficArgs, TrafficKind};

/// Long-format table: one row per `(n, model, s)`, then rows for the
/// `n >> d` limits and the solved crossover points. `flag` marks the first
/// listed `n` at which Performer beats dense attention and names each
/// crossover row.
pub fn speedup(args: &SpeedupArgs) -> Result<(), CliError> {
    let (d, t) = (args.d, args.tile);
    let m = args.m.unwrap_or_else(|| performer_features(d));
    let base = CostModelParams::new(1.0, d, t, 1.0, m).map_err(CliError::usage)?;
    for &s in &args.densities {
        base.with_s(s).validate().map_err(CliError::usage)?;
    }

    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["n", "model", "s", "speedup", "flag"])?;
    let mut performer_crossed = false;
    for &n in &args.n_list {
        let p = base.with_n(n);
        p.validate().map_err(CliError::usage)?;
        for &s in &args.densities {
            let q = p.with_s(s);
            let topk = speedup_topk_bound(&q).map_err(CliError::usage)?.finite;
            w.write_record([
                num(n),
                "topk_bound".into(),
                num(s),
                num(topk),
                String::new(),
            ])?;
            let fixed = speedup_fixed(&q).map_err(CliError::usage)?.finite;
            w.write_record([num(n), "fixed".into(), num(s), num(fixed), String::new()])?;
        }
        let nm = speedup_nm(&p).map_err(CliError::usage)?.finite;
        w.write_record([num(n), "nm".into(), num(0.5), num(nm), String::new()])?;
        let perf = performer_speedup(&p).map_err(CliError::usage)?;
        let flag = if perf >= 1.0 && !performer_crossed {
            performer_crossed = true;
            "performer_beats_dense"
        } else {
            ""
        };
        w.write_record([
            num(n),
            "performer".into(),
            String::new(),
            num(perf),
            flag.into(),
        ])?;
    }

    for &s in &args.densities {
        let q = base.with_s(s);
        let topk = speedup_topk_bound(&q).map_err(CliError::usage)?.asymptotic;
        w.write_record([
            "inf".into(),
            "topk_bound".into(),
            num(s),
            num(topk),
            String::new(),
        ])?;
        let fixed = speedup_fixed(&q).map_err(CliError::usage)?.asymptotic;
        w.write_record([
            "inf".into(),
            "fixed".into(),
            num(s),
            num(fixed),
            String::new(),
        ])?;
    }
    let nm = speedup_nm(&base).map_err(CliError::usage)?.asymptotic;
    w.write_record(["inf".into(), "nm".into(), num(0.5), num(nm), String::new()])?;

    let solved = |r: nmsparse::Result<f64>| r.map_err(CliError::failure);
    let be = solved(topk_break_even_density(d, t))?;
    w.write_record([
        "inf".into(),
        "topk_bound".into(),
        num(be),
        num(1.0),
        "crossover_topk_dense".into(),
    ])?;
    let tn = solved(topk_nm_equal_density(d, t))?;
    w.write_record([
        "inf".into(),
        "topk_bound".into(),
        num(tn),
        num(nm),
        "crossover_topk_nm".into(),
    ])?;
    let fx = solved(fixed_nm_equal_density(d, t))?;
    w.write_record([
        "inf".into(),
        "fixed".into(),
        num(fx),
        num(nm),
        "crossover_fixed_nm".into(),
    ])?;
    let pd = solved(performer_dense_crossover(d, t, m))?;
    w.write_record([
        num(pd),
        "performer".into(),
        String::new(),
        num(1.0),
        "crossover_performer_dense".into(),
    ])?;
    let pn = solved(performer_nm_crossover(d, t, m))?;
    let at = speedup_nm(&base.with_n(pn))
        .map_err(CliError::failure)?
        .finite;
    w.write_record([
        num(pn),
        "performer".into(),
        String::new(),
        num(at),
        "crossover_performer_nm".into(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn traffic(args: &TrafficArgs) -> Result<(), CliError> {
    let p = CostModelParams::new(
        args.n,
        args.d,
        args.tile,
        args.s,
        performer_features(args.d),
    )
    .map_err(CliError::usage)?;
    let kinds: &[(AttentionKind, &str)] = &[
        (AttentionKind::Full, "full"),
        (AttentionKind::TopK, "topk"),
        (AttentionKind::Fixed, "fixed"),
        (AttentionKind::NmSparse, "nm"),
    ];
    let wanted = |name: &str| match args.kind {
        TrafficKind::All => true,
        TrafficKind::Full => name == "full",
        TrafficKind::Topk => name == "topk",
        TrafficKind::Fixed => name == "fixed",
        TrafficKind::Nm => name == "nm",
    };
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["kind", "n", "d", "T", "s", "qk", "softmax", "av", "total"])?;
    for &(kind, name) in kinds.iter().filter(|(_, name)| wanted(name)) {
        let c = memory_access_counts(kind, &p).map_err(CliError::usage)?;
        w.write_record([
            name.to_string(),
            num(p.n),
            num(p.d),
            num(p.tile),
            num(p.s),
            num(c.qk),
            num(c.softmax),
            num(c.av),
            num(c.total()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
