//! Subcommand implementations. Every command writes `<out>.csv` (plus
//! `<out>_classes.csv` for `simulate`) and a `<out>.json` summary, and
//! returns whether its internal checks passed. All output is
//! deterministic for a fixed config and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use catfilter_core::chain::{
    class_probabilities, counting_moments, lindblad_integrate, marginal_analytic, marginal_exact,
    Chain, OutcomeChain, Picture,
};
use catfilter_core::dilation::{purification_residuals, purify_pinched, NormalState, OrthoResolution};
use catfilter_core::filter::{
    conditional_expectation_direct, filtering_wavefunction, girsanov_output_distribution,
    integrate_filter_along, kappa_coefficient, ltp_filter_check, sample_trajectory, FilterState,
    Observable, RngStream,
};
use catfilter_core::linalg::{trace_distance, CMatrix, Ket, Projector};
use catfilter_core::logic::{classify_pair, distributivity_witness, BoolElement};
use catfilter_core::randmat;
use serde_json::json;

use crate::config::RunConfig;

pub struct CommandOutcome {
    pub pass: bool,
}

fn fmt_e(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_output(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn csv_header(cfg: &RunConfig) -> String {
    format!(
        "# catfilter {} {} config={}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.subcommand,
        cfg.as_json()
    )
}

fn write_summary(cfg: &RunConfig, results: serde_json::Value, pass: bool) -> anyhow::Result<()> {
    let summary = json!({
        "command": cfg.subcommand,
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(cfg)?,
        "results": results,
        "pass": pass,
    });
    let path = cfg.out.with_extension("json");
    write_output(&path, &format!("{}\n", serde_json::to_string_pretty(&summary)?))
}

fn density_row(rho: &CMatrix) -> [f64; 4] {
    [rho[(0, 0)].re, rho[(0, 1)].re, rho[(0, 1)].im, rho[(1, 1)].re]
}

/// RK4 marginal vs the closed decay law, row per integrator step.
pub fn lindblad(cfg: &RunConfig) -> anyhow::Result<CommandOutcome> {
    let params = cfg.params()?;
    let rho0 = NormalState::pure(params.psi0()).map_err(|e| anyhow::anyhow!("{e}"))?;
    let series = lindblad_integrate(&rho0, cfg.t_max, cfg.dt, &params, Picture::Interaction)
        .map_err(|e| anyhow::anyhow!("integration failed: {e}"))?;
    let mut csv = csv_header(cfg);
    csv.push_str("t,rho_gg,rho_ge_re,rho_ge_im,rho_ee,analytic_gg,analytic_ge_re,analytic_ge_im,analytic_ee,err\n");
    let mut max_err = 0.0f64;
    for (t, rho) in &series {
        let num = density_row(&rho.density());
        let ana_state = marginal_analytic(*t, &params);
        let ana = density_row(&ana_state.density());
        let err = trace_distance(&rho.density(), &ana_state.density());
        max_err = max_err.max(err);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_e(*t),
            fmt_e(num[0]),
            fmt_e(num[1]),
            fmt_e(num[2]),
            fmt_e(num[3]),
            fmt_e(ana[0]),
            fmt_e(ana[1]),
            fmt_e(ana[2]),
            fmt_e(ana[3]),
            fmt_e(err)
        );
    }
    write_output(&cfg.out.with_extension("csv"), &csv)?;
    let pass = max_err <= 1e-8;
    write_summary(
        cfg,
        json!({
            "max_trace_distance": max_err,
            "threshold": 1e-8,
            "steps": series.len(),
        }),
        pass,
    )?;
    println!("lindblad: max trace distance {max_err:.3e} over {} steps -> {}", series.len(), verdict(pass));
    Ok(CommandOutcome { pass })
}

/// Class probabilities, counting moments and intensities against their
/// closed forms over a time grid. The p-free exponential variant of the
/// death-class weight (exact only at p = 1) is tabulated next to the
/// general form so the difference is visible, not hidden.
pub fn oracle(cfg: &RunConfig) -> anyhow::Result<CommandOutcome> {
    let params = cfg.params()?;
    let b2 = params.beta.norm_sqr();
    let rows = 20usize;
    let mut csv = csv_header(cfg);
    csv.push_str(
        "t,p_empty,p_class0,p_class1,total,tail_bound,e_n1,nu0,nu1,nu2,en1_derived,en1_pfree,en1_pfree_delta,marginal_dev\n",
    );
    let mut max_class_dev = 0.0f64;
    let mut max_marginal_dev = 0.0f64;
    let mut max_sum_dev = 0.0f64;
    let mut max_pfree_delta = 0.0f64;
    for i in 0..=rows {
        let t = cfg.t_max * i as f64 / rows as f64;
        let trunc = cfg.truncation(params.nu * t)?;
        let classes = class_probabilities(t, &params, &trunc).map_err(core_err)?;
        let moments = counting_moments(t, &params, &trunc).map_err(core_err)?;
        let exact = marginal_exact(t, &params, &trunc).map_err(core_err)?;
        let analytic = marginal_analytic(t, &params);
        let total = classes.p_empty + classes.p_class0 + classes.p_class1;
        let derived = b2 * (1.0 - (-params.p * params.nu * t).exp());
        let pfree = b2 * (1.0 - (-params.nu * t).exp());
        let delta = moments.expected_deaths - pfree;
        let marginal_dev = trace_distance(&exact.density(), &analytic.density());
        max_class_dev = max_class_dev.max((classes.p_class1 - derived).abs());
        max_sum_dev = max_sum_dev.max((total - 1.0).abs() - classes.tail_bound).max(0.0);
        max_marginal_dev = max_marginal_dev.max(marginal_dev);
        max_pfree_delta = max_pfree_delta.max(delta.abs());
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_e(t),
            fmt_e(classes.p_empty),
            fmt_e(classes.p_class0),
            fmt_e(classes.p_class1),
            fmt_e(total),
            fmt_e(classes.tail_bound),
            fmt_e(moments.expected_deaths),
            fmt_e(moments.nu0),
            fmt_e(moments.nu1),
            fmt_e(moments.nu2),
            fmt_e(derived),
            fmt_e(pfree),
            fmt_e(delta),
            fmt_e(marginal_dev)
        );
    }
    write_output(&cfg.out.with_extension("csv"), &csv)?;
    let pass = max_class_dev <= 1e-10 && max_marginal_dev <= 1e-10 && max_sum_dev <= 1e-12;
    write_summary(
        cfg,
        json!({
            "max_death_class_deviation": max_class_dev,
            "max_marginal_deviation": max_marginal_dev,
            "max_total_deviation_beyond_tail": max_sum_dev,
            "max_pfree_exponent_delta": max_pfree_delta,
            "note": "en1_pfree uses the exponent nu*t regardless of p; it matches the oracle only at p = 1 and the delta column reports the difference",
        }),
        pass,
    )?;
    println!(
        "oracle: class dev {max_class_dev:.3e}, marginal dev {max_marginal_dev:.3e}, p-free delta up to {max_pfree_delta:.3e} -> {}",
        verdict(pass)
    );
    Ok(CommandOutcome { pass })
}

fn label_string(labels: &[u8]) -> String {
    if labels.is_empty() {
        "empty".to_string()
    } else {
        labels.iter().map(|k| char::from(b'0' + k)).collect()
    }
}

/// Monte Carlo unravelling: trajectory-averaged marginal on a time grid
/// with standard errors, plus empirical record-class frequencies against
/// the output distribution.
pub fn simulate(cfg: &RunConfig) -> anyhow::Result<CommandOutcome> {
    let params = cfg.params()?;
    let grid: Vec<f64> = (0..=10).map(|i| cfg.t_max * i as f64 / 10.0).collect();
    let n = cfg.n_traj;
    let mut sum_re = vec![[[0.0f64; 2]; 2]; grid.len()];
    let mut sum_im = vec![[[0.0f64; 2]; 2]; grid.len()];
    let mut sq_re = vec![[[0.0f64; 2]; 2]; grid.len()];
    let mut sq_im = vec![[[0.0f64; 2]; 2]; grid.len()];
    let mut class_counts: std::collections::BTreeMap<Vec<u8>, u64> = Default::default();
    let horizon = if cfg.t_max > 0.0 { cfg.t_max } else { f64::MIN_POSITIVE };
    for stream in 0..n {
        let mut rng = RngStream::new(cfg.seed, stream as u64);
        let record = sample_trajectory(&params, horizon, &mut rng);
        for (gi, &t) in grid.iter().enumerate() {
            let psi = record.state_at(t, &params);
            let rho = psi.outer(&psi);
            for i in 0..2 {
                for j in 0..2 {
                    let z = rho[(i, j)];
                    sum_re[gi][i][j] += z.re;
                    sum_im[gi][i][j] += z.im;
                    sq_re[gi][i][j] += z.re * z.re;
                    sq_im[gi][i][j] += z.im * z.im;
                }
            }
        }
        *class_counts.entry(record.outcome_chain.outcomes().to_vec()).or_insert(0) += 1;
    }

    let nf = n as f64;
    let se = |sum: f64, sq: f64| -> f64 {
        if n > 1 {
            (((sq - sum * sum / nf) / (nf - 1.0)).max(0.0) / nf).sqrt()
        } else {
            0.0
        }
    };
    let mut csv = csv_header(cfg);
    csv.push_str(
        "t,mc_gg,mc_ge_re,mc_ge_im,mc_ee,se_gg,se_ge_re,se_ge_im,se_ee,analytic_gg,analytic_ge_re,analytic_ge_im,analytic_ee\n",
    );
    let mut worst_z = 0.0f64;
    for (gi, &t) in grid.iter().enumerate() {
        let ana = density_row(&marginal_analytic(t, &params).density());
        let mc = [
            sum_re[gi][0][0] / nf,
            sum_re[gi][0][1] / nf,
            sum_im[gi][0][1] / nf,
            sum_re[gi][1][1] / nf,
        ];
        let ses = [
            se(sum_re[gi][0][0], sq_re[gi][0][0]),
            se(sum_re[gi][0][1], sq_re[gi][0][1]),
            se(sum_im[gi][0][1], sq_im[gi][0][1]),
            se(sum_re[gi][1][1], sq_re[gi][1][1]),
        ];
        for k in 0..4 {
            let diff = (mc[k] - ana[k]).abs();
            if ses[k] > 0.0 {
                worst_z = worst_z.max(diff / ses[k]);
            } else if diff > 1e-12 {
                worst_z = f64::INFINITY;
            }
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_e(t),
            fmt_e(mc[0]),
            fmt_e(mc[1]),
            fmt_e(mc[2]),
            fmt_e(mc[3]),
            fmt_e(ses[0]),
            fmt_e(ses[1]),
            fmt_e(ses[2]),
            fmt_e(ses[3]),
            fmt_e(ana[0]),
            fmt_e(ana[1]),
            fmt_e(ana[2]),
            fmt_e(ana[3])
        );
    }
    write_output(&cfg.out.with_extension("csv"), &csv)?;

    // Record classes against the output distribution.
    let trunc = cfg.truncation(params.nu * cfg.t_max)?;
    let dist = girsanov_output_distribution(cfg.t_max, &params, &trunc).map_err(core_err)?;
    let mut class_csv = csv_header(cfg);
    class_csv.push_str("labels,prob,freq,count,z\n");
    let mut classes_pass = true;
    let mut small_mass = 0.0f64;
    let mut small_count = 0u64;
    let mut worst_class_z = 0.0f64;
    for (labels, prob) in &dist {
        let count = class_counts.get(labels).copied().unwrap_or(0);
        let freq = count as f64 / nf;
        let major = prob * nf >= 10.0;
        let z = if major {
            let sigma = (prob * (1.0 - prob) / nf).sqrt();
            let z = (freq - prob).abs() / sigma;
            worst_class_z = worst_class_z.max(z);
            if z > 4.0 {
                classes_pass = false;
            }
            format!("{z:.3}")
        } else {
            small_mass += prob;
            small_count += count;
            String::new()
        };
        let _ = writeln!(
            class_csv,
            "{},{},{},{count},{z}",
            label_string(labels),
            fmt_e(*prob),
            fmt_e(freq)
        );
    }
    let small_sigma = (small_mass * (1.0 - small_mass) / nf).sqrt().max(1.0 / nf);
    let small_diff = (small_count as f64 / nf - small_mass).abs();
    if small_diff > 4.0 * small_sigma + trunc.tail_bound {
        classes_pass = false;
    }
    write_output(&append_stem(&cfg.out, "_classes").with_extension("csv"), &class_csv)?;

    let marginal_pass = worst_z <= 3.0;
    let pass = marginal_pass && classes_pass;
    write_summary(
        cfg,
        json!({
            "n_traj": n,
            "worst_marginal_z": worst_z,
            "marginal_threshold_se": 3.0,
            "worst_class_z": worst_class_z,
            "class_threshold_sigma": 4.0,
            "rare_class_mass": small_mass,
            "rare_class_count": small_count,
            "distribution_total": dist.iter().map(|(_, p)| p).sum::<f64>(),
            "tail_bound": trunc.tail_bound,
        }),
        pass,
    )?;
    println!(
        "simulate: {} trajectories, worst marginal entry {worst_z:.2} se, worst class {worst_class_z:.2} sigma -> {}",
        n,
        verdict(pass)
    );
    Ok(CommandOutcome { pass })
}

fn append_stem(path: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    std::path::PathBuf::from(s)
}

/// Pathwise filter consistency and the law of total probability at the
/// filter level: the integrated Belavkin states and classical estimates
/// are compared against from-scratch conditional expectations on every
/// sampled record.
pub fn filter_verify(cfg: &RunConfig) -> anyhow::Result<CommandOutcome> {
    let params = cfg.params()?;
    let mut worst_state = 0.0f64;
    let mut worst_est = 0.0f64;
    let mut total_jumps = 0u64;
    let mut max_deaths = 0usize;
    let horizon = if cfg.t_max > 0.0 { cfg.t_max } else { f64::MIN_POSITIVE };
    for stream in 0..cfg.n_traj {
        let mut rng = RngStream::new(cfg.seed, stream as u64);
        let record = sample_trajectory(&params, horizon, &mut rng);
        total_jumps += record.outcome_chain.len() as u64;
        max_deaths = max_deaths.max(record.death_count());
        let states = integrate_filter_along(&record, horizon, &params).map_err(core_err)?;
        let times = record.outcome_chain.chain().times();
        let jumps = record.outcome_chain.len();
        for (i, fs) in states.iter().enumerate().skip(1) {
            let upto = i.min(jumps);
            let prefix = OutcomeChain::new(
                Chain::new(times[..upto].to_vec(), horizon).map_err(core_err)?,
                record.outcome_chain.outcomes()[..upto].to_vec(),
            )
            .map_err(core_err)?;
            if upto == i {
                let psi = filtering_wavefunction(&prefix, &params).map_err(core_err)?;
                worst_state = worst_state.max(fs.psi_cond.max_abs_diff(&psi));
            }
            for obs in Observable::ALL {
                let direct =
                    conditional_expectation_direct(&obs.matrix(), &prefix, fs.t, &params)
                        .map_err(core_err)?;
                worst_est = worst_est.max((fs.estimate(obs) - direct).abs());
            }
        }
    }

    // kappa_2 vanishes identically.
    let mut rng = RngStream::new(cfg.seed.wrapping_add(1), 0);
    let mut worst_kappa = 0.0f64;
    for _ in 0..100 {
        let mut fs = FilterState::new(&params);
        fs.t = rng.uniform() * cfg.t_max;
        let psi = randmat::random_ket(2, &mut rng);
        for obs in Observable::ALL {
            fs.estimates.insert(obs, psi.expect(&obs.matrix()).re);
        }
        fs.psi_cond = psi;
        for obs in Observable::ALL {
            worst_kappa =
                worst_kappa.max(kappa_coefficient(&fs, 2, &params, obs).map_err(core_err)?.abs());
        }
    }

    // LTP defects for the observable panel at three times.
    let mut worst_ltp = 0.0f64;
    for &frac in &[0.25, 0.5, 1.0] {
        let t = cfg.t_max * frac;
        let trunc = cfg.truncation(params.nu * t)?;
        for obs in Observable::ALL {
            let defect = ltp_filter_check(&obs.matrix(), t, &params, &trunc).map_err(core_err)?;
            worst_ltp = worst_ltp.max(defect);
        }
    }

    let checks: Vec<(&str, f64, f64)> = vec![
        ("pathwise_state_max_dev", worst_state, 1e-10),
        ("pathwise_estimate_max_dev", worst_est, 1e-10),
        ("kappa2_max_abs", worst_kappa, 1e-14),
        ("max_death_count", max_deaths as f64, 1.0),
        ("ltp_max_defect", worst_ltp, 1e-9),
    ];
    let mut csv = csv_header(cfg);
    csv.push_str("check,value,threshold,pass\n");
    let mut pass = true;
    for (name, value, threshold) in &checks {
        let ok = value <= threshold;
        pass &= ok;
        let _ = writeln!(csv, "{name},{},{},{}", fmt_e(*value), fmt_e(*threshold), ok);
    }
    let _ = writeln!(csv, "total_jumps,{},0,true", total_jumps);
    write_output(&cfg.out.with_extension("csv"), &csv)?;
    write_summary(
        cfg,
        json!({
            "n_traj": cfg.n_traj,
            "total_jumps": total_jumps,
            "pathwise_state_max_dev": worst_state,
            "pathwise_estimate_max_dev": worst_est,
            "kappa2_max_abs": worst_kappa,
            "max_death_count": max_deaths,
            "ltp_max_defect": worst_ltp,
        }),
        pass,
    )?;
    println!(
        "filter-verify: state {worst_state:.3e}, estimate {worst_est:.3e}, kappa2 {worst_kappa:.3e}, ltp {worst_ltp:.3e}, deaths <= {max_deaths} -> {}",
        verdict(pass)
    );
    Ok(CommandOutcome { pass })
}

/// Distributivity witnesses on classical and quantum triples, plus the
/// incompatible-pair classification.
pub fn logic_demo(cfg: &RunConfig) -> anyhow::Result<CommandOutcome> {
    let frac = std::f64::consts::FRAC_1_SQRT_2;
    let plus = Ket::from_real(&[frac, frac]);
    let p0 = Projector::onto(&Ket::basis(2, 0)).map_err(core_err)?;
    let pp = Projector::onto(&plus).map_err(core_err)?;
    let p1 = Projector::onto(&Ket::basis(2, 1)).map_err(core_err)?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let blocks = randmat::random_resolution(3, &[1, 2], &mut rng);
    let rand_q = randmat::random_projector(3, 1, &mut rng);
    let diag = |bits: u64| {
        catfilter_core::logic::embed_as_projector(&BoolElement::new(3, bits).expect("universe 3"))
    };

    let cases: Vec<(&str, Projector, Projector, Projector)> = vec![
        ("qubit_incompatible_triple", p0.clone(), pp.clone(), p1),
        ("diagonal_classical_triple", diag(0b011), diag(0b110), diag(0b101)),
        ("triple_with_zero", p0.clone(), pp.clone(), Projector::zero(2)),
        ("commuting_blocks", blocks[0].clone(), blocks[1].clone(), blocks[0].clone()),
        ("random_generic_triple", blocks[0].clone(), rand_q, blocks[1].clone()),
    ];
    let mut csv = csv_header(cfg);
    csv.push_str("case,holds,defect\n");
    let mut quantum_defect = 0.0;
    let mut classical_defect: f64 = 0.0;
    for (name, a, b, c) in &cases {
        let (holds, defect) = distributivity_witness(a, b, c, 1e-9).map_err(core_err)?;
        if *name == "qubit_incompatible_triple" {
            quantum_defect = defect;
        }
        if *name == "diagonal_classical_triple" || *name == "triple_with_zero" {
            classical_defect = classical_defect.max(defect);
        }
        let _ = writeln!(csv, "{name},{holds},{}", fmt_e(defect));
    }

    // Exhaustive Boolean distributivity on universe 4.
    let mut bool_defects = 0u64;
    for a in BoolElement::all(4) {
        for b in BoolElement::all(4) {
            for c in BoolElement::all(4) {
                let lhs = (a.members() & b.members()) | c.members();
                let rhs = (a.members() | c.members()) & (b.members() | c.members());
                if lhs != rhs {
                    bool_defects += 1;
                }
            }
        }
    }
    let _ = writeln!(csv, "boolean_universe4_exhaustive,{},{}", bool_defects == 0, fmt_e(bool_defects as f64));
    write_output(&cfg.out.with_extension("csv"), &csv)?;

    let cls = classify_pair(&p0, &pp).map_err(core_err)?;
    let pass = quantum_defect >= 0.5
        && classical_defect <= 1e-9
        && bool_defects == 0
        && cls.incompatible()
        && !cls.commuting;
    write_summary(
        cfg,
        json!({
            "quantum_triple_defect": quantum_defect,
            "classical_triple_max_defect": classical_defect,
            "boolean_violations": bool_defects,
            "witness_pair": {
                "disjoint": cls.disjoint,
                "inconsistent": cls.inconsistent,
                "conjoint": cls.conjoint,
                "commuting": cls.commuting,
                "incompatible": cls.incompatible(),
            },
        }),
        pass,
    )?;
    println!(
        "logic-demo: quantum defect {quantum_defect:.3}, classical defect {classical_defect:.3e}, boolean violations {bool_defects} -> {}",
        verdict(pass)
    );
    Ok(CommandOutcome { pass })
}

/// Purification round-trip residuals on random pinched densities.
pub fn purify_demo(cfg: &RunConfig) -> anyhow::Result<CommandOutcome> {
    let trials = cfg.n_traj.min(1000);
    let mut rng = RngStream::new(cfg.seed, 0);
    let mut csv = csv_header(cfg);
    csv.push_str("trial,dim,marginal_residual,intertwine_residual,correspondence_residual\n");
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for trial in 0..trials {
        let dim = 2 + trial % 3;
        let ranks: Vec<usize> = match dim {
            2 => vec![1, 1],
            3 => vec![1, 2],
            _ => vec![1, 2, 1],
        };
        let blocks = randmat::random_resolution(dim, &ranks, &mut rng);
        let res = OrthoResolution::indexed(blocks).map_err(core_err)?;
        let rho =
            NormalState::mixed(randmat::random_pinched_density(res.projectors(), &mut rng))
                .map_err(core_err)?;
        let pur = purify_pinched(&rho, &res).map_err(core_err)?;
        let tests: Vec<CMatrix> =
            (0..100).map(|_| randmat::random_hermitian(dim, &mut rng)).collect();
        let (m, i, c) = purification_residuals(&rho, &res, &pur, &tests).map_err(core_err)?;
        worst = (worst.0.max(m), worst.1.max(i), worst.2.max(c));
        let _ = writeln!(csv, "{trial},{dim},{},{},{}", fmt_e(m), fmt_e(i), fmt_e(c));
    }
    write_output(&cfg.out.with_extension("csv"), &csv)?;
    let pass = worst.0 <= 1e-10 && worst.1 <= 1e-10 && worst.2 <= 1e-10;
    write_summary(
        cfg,
        json!({
            "trials": trials,
            "max_marginal_residual": worst.0,
            "max_intertwine_residual": worst.1,
            "max_correspondence_residual": worst.2,
            "threshold": 1e-10,
        }),
        pass,
    )?;
    println!(
        "purify-demo: residuals {:.3e} / {:.3e} / {:.3e} over {trials} trials -> {}",
        worst.0,
        worst.1,
        worst.2,
        verdict(pass)
    );
    Ok(CommandOutcome { pass })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "ok"
    } else {
        "FAIL"
    }
}

fn core_err(e: catfilter_core::Error) -> anyhow::Error {
    anyhow::Error::new(e)
}
