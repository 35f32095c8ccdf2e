use cdg_core::arith::{divisors, gcd, is_prime};
use cdg_core::entropy::{self, EntropyEstimate};
use cdg_core::mixing::{self, CurveOptions, QFilter, Quantiles, ScanConfig};
use cdg_core::spectral::{self, SpectrumSlice};
use cdg_core::walk::{evolve_exact, evolve_mod, DEFAULT_EXACT_SITES};
use cdg_core::{hhms, WalkParams};
use serde_json::{json, Value};

use crate::args::*;
use crate::error::CliError;
use crate::report::{num, opt_num, Report};
use crate::step::parse_step_law;

/// Tolerance for the identity checks in `sieve-check`.
const IDENTITY_TOL: f64 = 1e-10;
/// Largest modulus printed row by row by `spectrum`.
const SPECTRUM_Q_MAX: u64 = 1 << 20;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn walk_params(w: &WalkArgs) -> Result<WalkParams, CliError> {
    Ok(WalkParams::new(w.a, parse_step_law(&w.step)?)?)
}

fn check_eps(eps: f64) -> Result<(), CliError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("--eps must lie in (0, 1), got {eps}")))
    }
}

fn resolve_h(p: &WalkParams, given: Option<f64>) -> Result<EntropyEstimate, CliError> {
    match given {
        Some(h) if h > 0.0 && h.is_finite() => Ok(EntropyEstimate {
            value: h,
            standard_error: 0.0,
            method: entropy::Method::ExactIncrement,
            n_used: 0,
            samples: 0,
        }),
        Some(h) => Err(invalid(format!("--h-ref must be positive, got {h}"))),
        None => Ok(entropy::reference_rate(p)?),
    }
}

fn record_h(r: &mut Report, h: &EntropyEstimate, given: bool) {
    r.set_nats("h_ref", h.value);
    r.set("h_ref_source", if given { "given" } else { h.method.as_str() });
}

/// Largest `n ≤ n_max` whose exact support fits the site cap.
fn feasible_n(p: &WalkParams, n_max: u32) -> u32 {
    (0..=n_max)
        .take_while(|&n| p.exact_window(n).is_some_and(|w| w <= DEFAULT_EXACT_SITES))
        .last()
        .unwrap_or(0)
}

fn cap_reason(p: &WalkParams, stopped: u32) -> String {
    let got = p.exact_window(stopped + 1).map_or("overflow".to_string(), |w| w.to_string());
    format!(
        "support of μ_{} spans {got} sites, over the cap of {DEFAULT_EXACT_SITES}; stopped at n = {stopped}",
        stopped + 1
    )
}

pub fn dispatch(cmd: &Command) -> Result<Report, CliError> {
    match cmd {
        Command::Entropy(a) => entropy_cmd(a),
        Command::Smb(a) => smb(a),
        Command::Hhms(a) => hhms_cmd(a),
        Command::Tv(a) => tv(a),
        Command::MixScan(a) => mix_scan(a),
        Command::Exceptional(a) => exceptional(a),
        Command::Spectrum(a) => spectrum(a),
        Command::SieveCheck(a) => sieve_check(a),
    }
}

pub fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Entropy(_) => "entropy",
        Command::Smb(_) => "smb",
        Command::Hhms(_) => "hhms",
        Command::Tv(_) => "tv",
        Command::MixScan(_) => "mix-scan",
        Command::Exceptional(_) => "exceptional",
        Command::Spectrum(_) => "spectrum",
        Command::SieveCheck(_) => "sieve-check",
    }
}

fn entropy_cmd(args: &EntropyArgs) -> Result<Report, CliError> {
    let p = walk_params(&args.walk)?;
    if args.n_max < 4 {
        return Err(invalid(format!("--n-max must be at least 4, got {}", args.n_max)));
    }
    let n = feasible_n(&p, args.n_max);
    if n < 4 {
        return Err(cap_error(&p, n));
    }
    let curve = entropy::entropy_curve(&p, n)?;
    let mut r = Report::new(
        "entropy",
        &["n", "entropy_nats", "entropy_bits", "increment_nats", "increment_bits", "cesaro_nats", "cesaro_bits"],
    );
    let bits = |x: f64| num(x / std::f64::consts::LN_2);
    for (k, &h) in curve.iter().enumerate() {
        let mut row = vec![json!(k), num(h), bits(h)];
        if k == 0 {
            row.extend([Value::Null, Value::Null, Value::Null, Value::Null]);
        } else {
            let (inc, ces) = (h - curve[k - 1], h / k as f64);
            row.extend([num(inc), bits(inc), num(ces), bits(ces)]);
        }
        r.row(row);
    }
    let increments: Vec<f64> = curve.windows(2).map(|w| w[1] - w[0]).collect();
    let last = increments[increments.len() - 1];
    let width = (last - increments[increments.len() - 2]).abs();
    r.set("n_used", n);
    r.set_nats("increment_rate", last);
    r.set_nats("increment_width", width);
    r.set_nats("cesaro_rate", curve[n as usize] / n as f64);
    r.set_nats("step_entropy", p.step().entropy());
    r.set_nats("log_a", (p.a() as f64).ln());
    if entropy::has_closed_form(&p) {
        let h = entropy::reference_rate(&p)?;
        r.set_nats("closed_form", h.value);
    }
    if n < args.n_max {
        r.incomplete = Some(cap_reason(&p, n));
    }
    Ok(r)
}

fn cap_error(p: &WalkParams, n: u32) -> CliError {
    CliError::Core(cdg_core::Error::CapExceeded {
        what: "exact support window",
        got: p.exact_window(n + 1).unwrap_or(u64::MAX),
        cap: DEFAULT_EXACT_SITES,
    })
}

fn smb(args: &SmbArgs) -> Result<Report, CliError> {
    let p = walk_params(&args.walk)?;
    if args.n == 0 || args.samples == 0 {
        return Err(invalid("--n and --samples must be positive"));
    }
    if args.exact_n < 4 {
        return Err(invalid(format!("--exact-n must be at least 4, got {}", args.exact_n)));
    }
    if let Some(a) = args.alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(invalid(format!("--alpha values must be positive, got {a}")));
    }
    let mut r = Report::new(
        "smb",
        &["method", "n", "samples", "value_nats", "value_bits", "standard_error_nats", "standard_error_bits"],
    );
    let push = |r: &mut Report, e: &EntropyEstimate| {
        r.row(vec![
            json!(e.method.as_str()),
            json!(e.n_used),
            json!(e.samples),
            num(e.value),
            num(e.bits()),
            num(e.standard_error),
            num(e.standard_error / std::f64::consts::LN_2),
        ]);
    };
    push(&mut r, &entropy::smb_estimate(&p, args.n, args.samples, args.seed)?);

    let n = feasible_n(&p, args.exact_n);
    if n < 4 {
        r.incomplete = Some(cap_reason(&p, n));
        return Ok(r);
    }
    let rates = entropy::rate_exact(&p, n)?;
    push(&mut r, &rates.increment);
    push(&mut r, &rates.cesaro);
    if entropy::has_closed_form(&p) {
        push(&mut r, &entropy::reference_rate(&p)?);
    }
    let profile = entropy::concentration_profile(&p, n, &args.alpha)?;
    let row = &profile[profile.len() - 1];
    r.set("exact_n", n);
    r.set("surprisal_variance", num(row.variance));
    r.set("surprisal_variance_over_n", num(row.variance / n as f64));
    for ((alpha, tail), (_, prod)) in row.tails.iter().zip(row.tail_products()) {
        r.set(&format!("tail_alpha_{alpha}"), num(*tail));
        r.set(&format!("tail_alpha_sq_n_alpha_{alpha}"), num(prod));
    }
    if n < args.exact_n {
        r.incomplete = Some(cap_reason(&p, n));
    }
    Ok(r)
}

fn hhms_cmd(args: &HhmsArgs) -> Result<Report, CliError> {
    if !(4..=hhms::MAX_LEVELS).contains(&args.levels) {
        return Err(invalid(format!(
            "--levels must lie in [4, {}], got {}",
            hhms::MAX_LEVELS,
            args.levels
        )));
    }
    let er = hhms::entropy_ratio(args.levels)?;
    let mut r = Report::new("hhms", &["n", "pair_count", "a_n", "max_j", "term", "raw_term"]);
    for ((lv, t), raw) in er.levels.iter().zip(&er.series.terms).zip(&er.series.raw_terms) {
        r.row(vec![json!(lv.level), json!(lv.pair_count), num(lv.a_n), json!(lv.max_j), num(*t), num(*raw)]);
    }
    r.set("levels", args.levels);
    r.set("l_at_one_third", num(er.series.value));
    r.set("remainder", num(er.series.remainder));
    r.set_nats("entropy", er.entropy_nats);
    r.set("ratio", num(er.ratio));
    r.set("cutoff_constant", num(er.cutoff_constant));
    Ok(r)
}

fn record_fields(r: &mut Report, rec: &mixing::MixingRecord) {
    r.set("q", rec.q);
    r.set("is_prime", rec.is_prime);
    r.set("log2_q", num(rec.log2_q));
    r.set("t_mix", rec.t_mix.map_or(Value::Null, |t| json!(t)));
    r.set("normalized", opt_num(rec.normalized));
    r.set("normalized_log2", opt_num(rec.normalized_log2));
    r.set("certified_at", rec.certified_at.map_or(Value::Null, |t| json!(t)));
    r.set("final_tv", num(rec.final_tv));
    r.set("steps_evaluated", rec.steps_evaluated);
    r.set("monotone", rec.monotone);
}

fn tv(args: &TvArgs) -> Result<Report, CliError> {
    let p = walk_params(&args.walk)?;
    check_eps(args.eps)?;
    let h = resolve_h(&p, args.h_ref)?;
    let opts = CurveOptions {
        n_max: args.n_max,
        eps: args.eps,
        full: args.full,
        keep_samples: true,
    };
    let rec = mixing::tv_curve_with(&p, args.q, h.value, opts)?;
    let mut r = Report::new("tv", &["n", "half_tv"]);
    for (n, v) in rec.tv_samples.iter().flatten() {
        r.row(vec![json!(n), num(*v)]);
    }
    record_fields(&mut r, &rec);
    r.set("eps", num(args.eps));
    record_h(&mut r, &h, args.h_ref.is_some());
    if let Some(delta) = args.delta {
        let lb = mixing::lower_bound_check(&p, args.q, delta, h.value)?;
        r.set("lower_bound_delta", num(delta));
        r.set("lower_bound_n", lb.n);
        r.set("lower_bound_half_tv", num(lb.half_tv));
        r.set("lower_bound_support_mod_q", lb.support_mod_q);
        r.set("lower_bound_counting_bound", num(lb.counting_bound));
    }
    if rec.t_mix.is_none() {
        r.set("note", format!("½TV stayed above ε through n = {}", rec.steps_evaluated));
    }
    Ok(r)
}

type Stat = (&'static str, fn(&Quantiles) -> f64);

fn quantile_footer(r: &mut Report, label_cols: usize, a: &Option<Quantiles>, b: &Option<Quantiles>) {
    let pick = |q: &Option<Quantiles>, f: fn(&Quantiles) -> f64| opt_num(q.as_ref().map(f));
    let stats: [Stat; 7] = [
        ("min", |q| q.min),
        ("q10", |q| q.q10),
        ("q25", |q| q.q25),
        ("median", |q| q.median),
        ("q75", |q| q.q75),
        ("q90", |q| q.q90),
        ("max", |q| q.max),
    ];
    for (name, f) in stats {
        let mut row = vec![json!(name)];
        row.extend(std::iter::repeat_n(Value::Null, label_cols));
        row.push(pick(a, f));
        row.push(pick(b, f));
        row.push(Value::Null);
        r.footer_row(row);
    }
}

fn mix_scan(args: &MixScanArgs) -> Result<Report, CliError> {
    let p = walk_params(&args.walk)?;
    check_eps(args.eps)?;
    if args.q_min > args.q_max {
        return Err(invalid(format!("--q-min {} exceeds --q-max {}", args.q_min, args.q_max)));
    }
    if args.q_max > mixing::DENSE_Q_MAX {
        return Err(CliError::Core(cdg_core::Error::CapExceeded {
            what: "--q-max",
            got: args.q_max,
            cap: mixing::DENSE_Q_MAX,
        }));
    }
    if args.stride == Some(0) {
        return Err(invalid("--stride must be positive"));
    }
    if args.margin.is_nan() || args.margin < 0.0 {
        return Err(invalid(format!("--margin must be non-negative, got {}", args.margin)));
    }
    let filter = match (args.odd, args.prime, args.stride) {
        (true, _, _) => QFilter::Odd,
        (_, true, _) => QFilter::Prime,
        (_, _, Some(s)) => QFilter::Stride(s),
        _ => QFilter::CoprimeToA,
    };
    let h = resolve_h(&p, args.h_ref)?;
    let mut cfg = ScanConfig::new(args.q_min, args.q_max, filter, h.value);
    cfg.eps = args.eps;
    cfg.n_max = args.n_max;
    cfg.exceptional_margin = args.margin;
    let rep = mixing::mixing_scan(&p, &cfg)?;

    let mut r = Report::new(
        "mix-scan",
        &["q", "is_prime", "t_mix", "log2_q", "normalized", "normalized_log2", "final_tv"],
    );
    for rec in &rep.records {
        r.row(vec![
            json!(rec.q),
            json!(rec.is_prime),
            rec.t_mix.map_or(Value::Null, |t| json!(t)),
            num(rec.log2_q),
            opt_num(rec.normalized),
            opt_num(rec.normalized_log2),
            num(rec.final_tv),
        ]);
    }
    let agg = &rep.aggregates;
    quantile_footer(&mut r, 3, &agg.normalized, &agg.normalized_log2);
    r.set("moduli", rep.records.len() + rep.failures.len());
    r.set("evaluated", rep.records.len());
    r.set("unmixed", agg.unmixed);
    r.set("exceptional", agg.exceptional);
    r.set("exceptional_prime_weight", num(agg.exceptional_prime_weight));
    r.set("non_monotone", agg.non_monotone);
    r.set("failures", rep.failures.len());
    for (q, why) in &rep.failures {
        r.set(&format!("failure_{q}"), why.as_str());
    }
    r.set("eps", num(args.eps));
    record_h(&mut r, &h, args.h_ref.is_some());
    if !rep.failures.is_empty() {
        r.incomplete = Some(format!("{} moduli could not be evaluated", rep.failures.len()));
    }
    Ok(r)
}

fn exceptional(args: &ExceptionalArgs) -> Result<Report, CliError> {
    let p = walk_params(&args.walk)?;
    check_eps(args.eps)?;
    if args.k_min == 0 || args.k_min > args.k_max {
        return Err(invalid(format!("need 1 ≤ --k-min ≤ --k-max, got {}..{}", args.k_min, args.k_max)));
    }
    let top = (p.a() as f64).powi(args.k_max as i32);
    if top > mixing::DENSE_Q_MAX as f64 * 1.1 {
        return Err(CliError::Core(cdg_core::Error::CapExceeded {
            what: "a^k_max",
            got: top.min(u64::MAX as f64) as u64,
            cap: mixing::DENSE_Q_MAX,
        }));
    }
    let h = resolve_h(&p, args.h_ref)?;
    let fam = mixing::exceptional_family_scan(
        &p,
        args.k_min..=args.k_max,
        args.eps,
        h.value,
        args.samples,
        args.seed,
        args.n_max,
    )?;
    let mut r = Report::new(
        "exceptional",
        &["k", "q", "t_mix", "normalized", "random_median", "random_count", "excess_ratio"],
    );
    for row in &fam.rows {
        r.row(vec![
            json!(row.k),
            json!(row.q),
            row.record.t_mix.map_or(Value::Null, |t| json!(t)),
            opt_num(row.record.normalized),
            opt_num(row.random_median),
            json!(row.random_count),
            opt_num(row.excess_ratio),
        ]);
    }
    r.set("excess_non_decreasing", fam.excess_non_decreasing);
    r.set("eps", num(args.eps));
    record_h(&mut r, &h, args.h_ref.is_some());
    if let Some(n) = args.density_n {
        let d = mixing::exceptional_prime_density(&p, n, args.eps, args.p_max, h.value)?;
        r.set("density_n", n);
        r.set("density_p_max", d.p_max);
        r.set("density_log_cutoff", num(d.log_cutoff));
        r.set("density_primes_checked", d.primes_checked);
        r.set("density_exceptional", d.exceptional.len());
        r.set("density_weighted_sum", num(d.weighted_sum));
        r.set("density_mertens_total", num(d.mertens_total));
        r.set("density_ratio", num(d.ratio()));
    }
    Ok(r)
}

fn spectrum(args: &SpectrumArgs) -> Result<Report, CliError> {
    let p = walk_params(&args.walk)?;
    if args.q < 2 {
        return Err(CliError::Core(cdg_core::Error::BadModulus { min: 2, got: args.q }));
    }
    if args.q > SPECTRUM_Q_MAX {
        return Err(CliError::Core(cdg_core::Error::CapExceeded {
            what: "modulus for spectrum",
            got: args.q,
            cap: SPECTRUM_Q_MAX,
        }));
    }
    let slice = SpectrumSlice::of_walk(&p, args.q, args.n);
    let mut r = Report::new("spectrum", &["r", "re", "im", "abs"]);
    for (k, z) in slice.amplitudes.iter().enumerate() {
        r.row(vec![json!(k), num(z.re), num(z.im), num(z.norm())]);
    }
    r.set("q", args.q);
    r.set("n", args.n);
    r.set("l2_dist_sq_scaled", num(slice.nonzero_energy()));
    r.set("sup_off_origin", num(slice.amplitudes.iter().skip(1).map(|z| z.norm()).fold(0.0, f64::max)));
    if gcd(args.q, p.a()) == 1 {
        let b = spectral::small_moduli_bound(&p, args.q, args.n)?;
        r.set("bound_block", b.block);
        r.set("bound_blocks", b.blocks);
        r.set("bound_rho", num(b.rho));
        r.set("bound", num(b.bound));
        r.set("bound_holds", slice.nonzero_energy() <= b.bound * (1.0 + 1e-12));
    }
    Ok(r)
}

fn sieve_check(args: &SieveArgs) -> Result<Report, CliError> {
    let p = walk_params(&args.walk)?;
    if args.q < 2 || args.q > spectral::DEFAULT_PROJECT_MAX {
        return Err(invalid(format!(
            "--q must lie in [2, {}], got {}",
            spectral::DEFAULT_PROJECT_MAX,
            args.q
        )));
    }
    if args.trials == 0 || args.max_denominator < 2 {
        return Err(invalid("--trials must be positive and --max-denominator at least 2"));
    }
    let mut r = Report::new("sieve-check", &["check", "q", "q0", "value", "bound", "ok"]);
    let mut all_ok = true;
    let mut push = |r: &mut Report, check: &str, q: u64, q0: u64, value: f64, bound: f64| {
        let ok = value <= bound;
        all_ok &= ok;
        r.row(vec![json!(check), json!(q), json!(q0), num(value), num(bound), json!(ok)]);
    };

    let nu = evolve_mod::<f64>(&p, args.q, args.n)?;
    for q0 in divisors(args.q) {
        let dec = spectral::project(&nu, q0)?;
        let part = dec
            .reconstruct()
            .iter()
            .zip(nu.masses())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        push(&mut r, "partition", args.q, q0, part, IDENTITY_TOL);
        let mob = spectral::mobius_projection(&nu, q0)?;
        let diff = mob.iter().zip(dec.top()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        push(&mut r, "mobius", args.q, q0, diff, IDENTITY_TOL);
        let norms = spectral::operator_norm_checks(args.q, q0, args.trials, args.seed)?;
        push(&mut r, "pi-norm", args.q, q0, norms.max_pi_ratio, 1.0 + 1e-9);
        push(&mut r, "p-norm", args.q, q0, norms.max_p_ratio, norms.divisor_bound as f64 + 1e-9);
    }

    let lattice = evolve_exact::<f64>(&p, args.n)?;
    let ls = spectral::large_sieve_sum(&lattice, args.q0, args.big_q)?;
    push(&mut r, "large-sieve", args.big_q, args.q0, ls.lhs, ls.rhs);

    let averaged = spectral::multiplicity_average(&p, &lattice, args.n, args.m)?;
    let mut worst = f64::NEG_INFINITY;
    let mut frequencies = 0u64;
    for s in 2..=args.max_denominator {
        for k in (1..s).filter(|&k| gcd(k, s) == 1) {
            let (lhs, rhs) = spectral::multiplicity_cauchy_schwarz(&p, &lattice, &averaged, args.m, k, s);
            worst = worst.max(lhs - rhs);
            frequencies += 1;
        }
    }
    push(&mut r, "multiplicity-cs", args.max_denominator, 1, worst, 1e-12);

    r.set("walk_steps", args.n);
    r.set("trials", args.trials);
    r.set("q_is_prime", is_prime(args.q));
    r.set("large_sieve_half_width", ls.half_width);
    r.set("large_sieve_fractions", ls.fractions);
    r.set("large_sieve_ratio", num(ls.ratio()));
    r.set("multiplicity_m", args.m);
    r.set("multiplicity_frequencies", frequencies);
    r.set("all_ok", all_ok);
    Ok(r)
}
