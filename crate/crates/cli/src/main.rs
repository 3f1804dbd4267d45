//! Command-line driver: parses diagram files, dispatches the invariant
//! computations, and emits deterministic reports.
//!
//! Exit codes: 0 success, 1 validation error, 2 certification failure,
//! 3 internal invariant breach.

use hodiag_cli::{format, report};

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hodiag_core::derived::eval_value;
use hodiag_core::diagram::{
    homology_diagram, latching, minimal_cofibrant_check, minimal_cofibrant_replace,
    reedy_cofibrant_replace, to_hybrid,
};
use hodiag_core::exactalg::FieldSpec;
use hodiag_core::generators::{
    gen_cube, gen_minimal, random_double_complex, random_minimal_diagram, random_poset,
    strict_zero_square,
};
use hodiag_core::hybrid::{expand, hybridize, reconstruct, step, verify_theorem_a};
use hodiag_core::poset::{all_path_objects, PathObject};
use hodiag_core::specseq::{chase_pages, classical_pages, cross_check, filtered_to_double};
use hodiag_core::util::DetRng;
use report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Text,
    Structured,
}

#[derive(Parser)]
#[command(
    name = "hodiag",
    about = "Exact homotopy invariants of poset-indexed diagrams of chain complexes over F_p"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Parser, Debug)]
struct CommonArgs {
    /// Input diagram file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Override the file's characteristic.
    #[arg(long)]
    prime: Option<u64>,
    /// Report format.
    #[arg(long, value_enum, default_value = "text")]
    output: OutputMode,
    /// Cap on the size of incomparable families.
    #[arg(long, default_value_t = 4)]
    max_gamma: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Objectwise homology of the diagram.
    Homology {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reedy cofibrant replacement: latching and quasi-iso verdicts.
    Cofibrant {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Minimal-cofibrancy check; on failure, the minimal replacement.
    Minimal {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Derived data at a level: kernels, values, indeterminacies.
    Derived {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// The hybridization tower through a level.
    Hybridize {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Expansion + reconstruction certificates (and the k-truncation
    /// recovery report).
    Reconstruct {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Spectral-sequence pages of the double (or filtered) section, with the
    /// chase/classical cross-check.
    Ss {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 2)]
        page: usize,
    },
    /// Randomized invariant suites.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        cases: usize,
        #[arg(long, value_enum, default_value = "text")]
        output: OutputMode,
    },
    /// Generate an example diagram file.
    Gen {
        /// cube | minimal | split-square
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        dim_v: usize,
        #[arg(long, default_value_t = 5)]
        prime: u64,
        /// Output path (stdout when absent).
        #[arg(long)]
        output_file: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load(common: &CommonArgs) -> Result<(hodiag_core::diagram::Diagram, FieldSpec), String> {
    let text = std::fs::read_to_string(&common.input)
        .map_err(|e| format!("cannot read {}: {e}", common.input.display()))?;
    let file = format::parse(&text).map_err(|e| e.to_string())?;
    format::diagram_from_file(&file, common.prime).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Homology { common } => {
            let (d, _) = load(&common)?;
            let h = homology_diagram(&d);
            let mut rep = Report::new("homology");
            for (i, o) in h.objects.iter().enumerate() {
                rep.table_row(
                    "objects",
                    d.index().label(i),
                    serde_json::json!(o.dims),
                );
            }
            rep.emit(common.output == OutputMode::Structured);
            Ok(ExitCode::SUCCESS)
        }
        Command::Cofibrant { common } => {
            let (d, _) = load(&common)?;
            let (r, etas) = reedy_cofibrant_replace(&d).map_err(|e| e.to_string())?;
            let mut rep = Report::new("cofibrant");
            let mut ok = true;
            for (i, eta) in etas.iter().enumerate() {
                let qi = eta.is_quasi_iso();
                let monic = if r.index().strict_predecessors(i).is_empty() {
                    true
                } else {
                    latching(&r, i).1.map(|m| m.is_monic()).unwrap_or(false)
                };
                ok &= qi && monic;
                rep.table_row(
                    "objects",
                    d.index().label(i),
                    serde_json::json!({
                        "dims": r.object(i).dims(),
                        "quasi_iso": qi,
                        "latching_monic": monic,
                    }),
                );
            }
            rep.set("verdict", serde_json::json!(ok));
            rep.emit(common.output == OutputMode::Structured);
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
        Command::Minimal { common } => {
            let (d, _) = load(&common)?;
            let mut rep = Report::new("minimal");
            let code = match minimal_cofibrant_check(&d) {
                Ok(()) => {
                    rep.set("check", serde_json::json!("ok"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    rep.set("check", serde_json::json!(format!("{e}")));
                    match minimal_cofibrant_replace(&d) {
                        Ok((m, _)) => {
                            for i in 0..m.index().len() {
                                rep.table_row(
                                    "replacement",
                                    d.index().label(i),
                                    serde_json::json!(m.object(i).dims()),
                                );
                            }
                            rep.set("replacement_check", serde_json::json!("ok"));
                            ExitCode::SUCCESS
                        }
                        Err(e) => {
                            rep.set("replacement_check", serde_json::json!(format!("{e}")));
                            ExitCode::from(2)
                        }
                    }
                }
            };
            rep.emit(common.output == OutputMode::Structured);
            Ok(code)
        }
        Command::Derived { common, level } => {
            let (d, _) = load(&common)?;
            let mut rep = Report::new("derived");
            rep.set("level", serde_json::json!(level));
            if level == 1 {
                // direct global derived diagram with the full index
                let h = to_hybrid(&d, 0);
                let gd = hodiag_core::derived::global_derived_with(&h, common.max_gamma)
                    .map_err(|e| e.to_string())?;
                gd.validate().map_err(|e| e.to_string())?;
                for (id, ker) in &gd.kernel_spaces {
                    rep.table_row(
                        "kernel_objects",
                        gd.index.poset.label(*id),
                        serde_json::json!(ker.dim()),
                    );
                }
                for pd in &gd.partials {
                    for ((g, del), v) in &pd.values {
                        rep.table_row(
                            "values",
                            &format!(
                                "{}:{},{}->{}",
                                d.index().label(pd.path.alpha),
                                d.index().label(*g),
                                d.index().label(*del),
                                d.index().label(pd.path.beta.unwrap())
                            ),
                            serde_json::json!({
                                "rank": v.rank(),
                                "indeterminacy": pd.indeterminacy.dim(),
                            }),
                        );
                    }
                }
                // full per-object dims and per-edge (shift, matrix) records
                for (id, v) in gd.values.iter().enumerate() {
                    rep.table_row(
                        "index",
                        gd.index.poset.label(id),
                        serde_json::json!(v.dims),
                    );
                }
                for (i, &(a, b, kind)) in gd.index.edges.iter().enumerate() {
                    let arrow = &gd.arrows[i];
                    let comps: Vec<serde_json::Value> = arrow
                        .components()
                        .map(|(&(shift, deg), m)| {
                            let rows: Vec<Vec<u64>> =
                                (0..m.rows()).map(|r| m.row(r)).collect();
                            serde_json::json!({
                                "shift": shift,
                                "degree": deg,
                                "matrix": rows,
                            })
                        })
                        .collect();
                    rep.table_row(
                        "edges",
                        &format!(
                            "{}->{} ({:?})",
                            gd.index.poset.label(a),
                            gd.index.poset.label(b),
                            kind
                        ),
                        serde_json::json!(comps),
                    );
                }
            } else {
                let tower = hybridize(&d, level - 1).map_err(|e| e.to_string())?;
                let (data, _) = step(&tower.state).map_err(|e| e.to_string())?;
                let idx = tower.state.high.index().clone();
                for pv in &data.paths {
                    for ((g, del), &rank) in &pv.pair_ranks {
                        rep.table_row(
                            "values",
                            &format!(
                                "{}:{},{}->{}",
                                idx.label(pv.path.alpha),
                                idx.label(*g),
                                idx.label(*del),
                                idx.label(pv.path.beta.unwrap())
                            ),
                            serde_json::json!({
                                "kernel": pv.kernel_dim,
                                "rank": rank,
                                "indeterminacy": pv.indeterminacy_dim,
                            }),
                        );
                    }
                }
                for fp in &data.formal_paths {
                    rep.table_row(
                        "composite_values",
                        &format!(
                            "{}=>{}",
                            idx.label(fp.root),
                            idx.label(fp.beta)
                        ),
                        serde_json::json!({
                            "mediators": fp.mediators.iter().map(|&m| idx.label(m)).collect::<Vec<_>>(),
                            "kernel": fp.kernel_dim,
                            "rank": fp.value_rank_mod_indeterminacy,
                            "shift": fp.total_shift,
                            "indeterminacy": fp.indeterminacy_dim,
                        }),
                    );
                }
            }
            rep.emit(common.output == OutputMode::Structured);
            Ok(ExitCode::SUCCESS)
        }
        Command::Hybridize { common, level } => {
            let (d, _) = load(&common)?;
            let tower = hybridize(&d, level).map_err(|e| e.to_string())?;
            let mut rep = Report::new("hybridize");
            rep.set("levels", serde_json::json!(level));
            rep.set(
                "objects",
                serde_json::json!(tower.state.high.index().len()),
            );
            for (l, data) in tower.levels.iter().enumerate() {
                rep.table_row(
                    "tower",
                    &format!("level {l}"),
                    serde_json::json!({
                        "paths": data.paths.len(),
                        "composite_paths": data.formal_paths.len(),
                        "nonzero_values": data
                            .paths
                            .iter()
                            .flat_map(|pv| pv.pair_ranks.values())
                            .filter(|&&r| r > 0)
                            .count(),
                    }),
                );
                for pv in &data.paths {
                    for ((g, del), &rank) in &pv.pair_ranks {
                        rep.table_row(
                            "level_values",
                            &format!(
                                "{l}:{}:{},{}->{}",
                                tower.state.high.index().label(pv.path.alpha),
                                tower.state.high.index().label(*g),
                                tower.state.high.index().label(*del),
                                tower.state.high.index().label(pv.path.beta.unwrap()),
                            ),
                            serde_json::json!({
                                "kernel": pv.kernel_dim,
                                "rank": rank,
                                "indeterminacy": pv.indeterminacy_dim,
                            }),
                        );
                    }
                }
            }
            rep.emit(common.output == OutputMode::Structured);
            Ok(ExitCode::SUCCESS)
        }
        Command::Reconstruct { common, level } => {
            let (d, _) = load(&common)?;
            let mut rep = Report::new("reconstruct");
            let h = to_hybrid(&d, 0);
            let e = expand(&h).map_err(|e| e.to_string())?;
            let rec = reconstruct(&h, &e).map_err(|e| e.to_string())?;
            rep.set("expansion_objects", serde_json::json!(e.diagram.index().len()));
            rep.set("h_isos", serde_json::json!(rec.h_isos));
            rep.set("natural", serde_json::json!(rec.natural));
            let theorem = verify_theorem_a(&d, level).map_err(|e| e.to_string())?;
            rep.set("truncation_recovered", serde_json::json!(theorem.certified()));
            if !theorem.details.is_empty() {
                rep.set("details", serde_json::json!(theorem.details));
            }
            let ok = rec.h_isos && rec.natural && theorem.certified();
            rep.emit(common.output == OutputMode::Structured);
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Ss { common, page } => {
            let text = std::fs::read_to_string(&common.input)
                .map_err(|e| format!("cannot read {}: {e}", common.input.display()))?;
            let file = format::parse(&text).map_err(|e| e.to_string())?;
            let dc = if file.double.is_some() {
                format::double_from_file(&file, common.prime).map_err(|e| e.to_string())?
            } else {
                let fc =
                    format::filtered_from_file(&file, common.prime).map_err(|e| e.to_string())?;
                filtered_to_double(&fc).map_err(|e| e.to_string())?
            };
            let pages = classical_pages(&dc, page);
            let chased = chase_pages(&dc, page).map_err(|e| e.to_string())?;
            let mut rep = Report::new("ss");
            for pg in &pages {
                for (key, entry) in &pg.entries {
                    if entry.dim == 0 {
                        continue;
                    }
                    let diff = pg.differentials.get(key);
                    rep.table_row(
                        "pages",
                        &format!("E^{}_{},{}", pg.r, key.0, key.1),
                        serde_json::json!({
                            "dim": entry.dim,
                            "differential_rank": diff.map(|d| d.value.rank()).unwrap_or(0),
                            "indeterminacy": diff.map(|d| d.indeterminacy.dim()).unwrap_or(0),
                        }),
                    );
                }
            }
            let _ = chased;
            let report = cross_check(&dc, page).map_err(|e| e.to_string())?;
            rep.set("cross_check", serde_json::json!(report.ok()));
            if !report.ok() {
                rep.set("mismatches", serde_json::json!(report.mismatches));
            }
            rep.emit(common.output == OutputMode::Structured);
            Ok(if report.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Check { seed, cases, output } => {
            let verdict = run_check(seed, cases, output == OutputMode::Structured);
            Ok(match verdict {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(3),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(3)
                }
            })
        }
        Command::Gen {
            kind,
            n,
            dim_v,
            prime,
            output_file,
        } => {
            let field = FieldSpec::new(prime).map_err(|e| e.to_string())?;
            let d = match kind.as_str() {
                "cube" => gen_cube(field, n, dim_v),
                "minimal" => gen_minimal(field, n, dim_v),
                "split-square" => strict_zero_square(field, dim_v),
                other => return Err(format!("unknown kind {other:?}")),
            };
            let file = format::diagram_to_file(&d);
            let text = format::serialize(&file);
            match output_file {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Randomized invariant suites for `check`: subspace canonicity, diagram
/// validation, fan exactness, replacement properties, and the spectral
/// cross-check.
fn run_check(seed: u64, cases: usize, structured: bool) -> Result<bool, String> {
    let mut rep = Report::new("check");
    let mut ok = true;
    let mut rng = DetRng::new(seed);
    // subspace + homology invariants
    for _ in 0..cases {
        let p = [2u64, 3, 5][rng.usize_below(3)];
        let field = FieldSpec::new(p).unwrap();
        let idx = random_poset(&mut rng, 5);
        let d = random_minimal_diagram(&mut rng, field, &idx, 2, 2);
        if minimal_cofibrant_check(&d).is_err() {
            ok = false;
        }
        // evaluation agrees with the hocolim realization on every path
        let paths = all_path_objects(&idx, 4).map_err(|e| e.to_string())?;
        for po in paths.iter().take(2) {
            let po: &PathObject = po;
            let pd = hodiag_core::derived::inclusion_exclusion(&d, po, 0)
                .map_err(|e| e.to_string())?;
            for ((g, del), psi) in &pd.psi {
                let ev = eval_value(&d, po.alpha, (*g, *del), po.beta.unwrap(), 0)
                    .map_err(|e| e.to_string())?;
                let field_p = field.p();
                for c in 0..psi.cols() {
                    let a = psi.col(c);
                    let b = ev.value.col(c);
                    let diff: Vec<u64> = a
                        .iter()
                        .zip(b.iter())
                        .map(|(&x, &y)| (x + field_p - y) % field_p)
                        .collect();
                    if !ev.indeterminacy.contains_vector(&diff) {
                        ok = false;
                    }
                }
            }
        }
    }
    rep.set("diagram_suites", serde_json::json!(ok));
    // spectral cross-checks
    let mut ss_ok = true;
    for _ in 0..cases {
        let dc = random_double_complex(&mut rng, FieldSpec::new(5).unwrap(), 4, 2, 2);
        let report = cross_check(&dc, 3).map_err(|e| e.to_string())?;
        if !report.ok() {
            ss_ok = false;
        }
    }
    rep.set("spectral_suites", serde_json::json!(ss_ok));
    rep.set("verdict", serde_json::json!(ok && ss_ok));
    rep.emit(structured);
    Ok(ok && ss_ok)
}
